"""Conditional maximum-likelihood fitting of latent class models.

The observed-data objective is the conditional log-likelihood

    L(Q) = sum_{h in H*} n_h log( pi_h / (1 - pi_0) ),

the multinomial likelihood of the observed cells given their total. It is
maximized by EM with two kinds of missing data: the class label of every
individual, and the never-observed individuals themselves. Each outer
iteration (a) imputes the expected all-zero count n0_hat = n pi_0 / (1 - pi_0)
under the current parameters, then (b) performs one standard complete-table
latent-class EM update (cell-level class responsibilities, weighted M-step)
on the table augmented with the all-zero cell at n0_hat. Marginalizing the
imputed geometric "ghost" counts reproduces exactly the conditional
likelihood, so L is nondecreasing across outer iterations -- a contract the
tests enforce.

The fitted missing mass converts to the standard conditional estimator of
the population size, N_hat = n / (1 - pi0_hat). When the family is not
identifiable (2J > K) the likelihood surface has a ridge of equally good
models with different missing masses; ``probe_nonidentifiability`` makes
that visible by clustering multistart results by log-likelihood and flagging
clusters whose N_hat values spread too far.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    NonidentifiableFamilyWarning,
    OverparameterizedWarning,
)
from .identifiability import is_identifiable, parameter_bound_satisfied
from .model import ContingencyTable, LatentClassModel, cell_probabilities
from .patterns import PatternOrder


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the multistart EM fitter."""

    classes: int
    starts: int = 20
    max_outer_iters: int = 2000
    rel_loglik_tol: float = 1e-10
    seed: int = 0
    lambda_clamp: tuple[float, float] = (1e-10, 1.0)

    def __post_init__(self):
        if self.classes < 1:
            raise DomainError(f"class count must be >= 1, got {self.classes}")
        if self.starts < 1:
            raise DomainError(f"starts must be >= 1, got {self.starts}")
        if self.max_outer_iters < 1:
            raise DomainError(f"max_outer_iters must be >= 1, got {self.max_outer_iters}")
        if not self.rel_loglik_tol > 0:
            raise DomainError(f"rel_loglik_tol must be > 0, got {self.rel_loglik_tol}")
        lo, hi = self.lambda_clamp
        if not 0 < lo < hi <= 1:
            raise DomainError(f"lambda_clamp must satisfy 0 < lo < hi <= 1, got {self.lambda_clamp}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class FitResult:
    """One converged (or stopped) EM run.

    ``n_hat`` is n / (1 - pi0_hat), reported raw and rounded. The fitted
    model is constructed without the distinctness requirement: classes may
    merge during optimization, which ``distinct_classes`` records.
    """

    model: LatentClassModel
    cond_loglik: float
    pi0_hat: float
    n_hat: float
    n_hat_rounded: int
    iterations: int
    converged: bool
    start_index: int
    distinct_classes: bool


def conditional_loglik(table: ContingencyTable, model: LatentClassModel) -> float:
    """sum_h n_h log(conditional pi_h); -inf if a populated cell has mass 0.

    Cells with n_h = 0 contribute nothing regardless of their probability
    (0 log 0 = 0). A populated cell with zero conditional mass makes the
    model impossible for the data; the sentinel -inf is returned rather
    than raised so multistart sweeps can keep going.
    """
    if table.k != model.k:
        raise DimensionMismatchError(f"table has K={table.k}, model has K={model.k}")
    cond = cell_probabilities(model).conditional()
    counts = table.counts
    positive = counts > 0
    if np.any(cond[positive] == 0.0):
        return float("-inf")
    return float(np.sum(counts[positive] * np.log(cond[positive])))


def saturated_loglik(table: ContingencyTable) -> float:
    """The multinomial entropy bound sum_h n_h log(n_h / n); an upper bound
    on the conditional log-likelihood of any model."""
    counts = table.counts
    n = table.n
    if n == 0:
        return 0.0
    positive = counts > 0
    return float(np.sum(counts[positive] * np.log(counts[positive] / n)))


def _class_cell_matrix(lambdas: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """(J, 2^K) matrix of per-class cell probabilities over all of H."""
    # log-free product: lambda^h (1-lambda)^(1-h) via where() on the bit grid
    lam = lambdas[:, None, :]  # (J, 1, K)
    b = bits[None, :, :]  # (1, 2^K, K)
    factors = np.where(b == 1, lam, 1.0 - lam)
    return factors.prod(axis=2)


def _em_start(
    table: ContingencyTable,
    config: FitConfig,
    start_index: int,
    trace_out: list[float] | None = None,
) -> FitResult:
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(start_index,)))
    j, k, n = config.classes, table.k, table.n
    bits = PatternOrder(k).bit_matrix(include_missing=True).astype(np.float64)
    counts = np.concatenate([[0.0], table.counts.astype(np.float64)])
    lo, hi = config.lambda_clamp

    # Start: near-uniform weights, diffuse sampling probabilities.
    weights = 1.0 + rng.uniform(-0.1, 0.1, size=j)
    weights /= weights.sum()
    lambdas = rng.uniform(0.2, 0.8, size=(j, k))

    def loglik(cell_probs: np.ndarray) -> float:
        pi = weights @ cell_probs
        denom = 1.0 - pi[0]
        positive = counts[1:] > 0
        return float(np.sum(counts[1:][positive] * np.log(pi[1:][positive] / denom)))

    cell = _class_cell_matrix(lambdas, bits)
    current = loglik(cell)
    if trace_out is not None:
        trace_out.append(current)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_outer_iters + 1):
        pi = weights @ cell  # (2^K,)
        # E-step part 1: expected never-observed count under current model.
        counts[0] = n * pi[0] / (1.0 - pi[0])
        # E-step part 2: class responsibilities per cell of the augmented
        # table. Cells with zero mass under every class get responsibility 0
        # (they also hold no counts once the likelihood is finite).
        safe_pi = np.where(pi > 0.0, pi, 1.0)
        resp = weights[:, None] * cell / safe_pi[None, :]  # (J, 2^K)
        # M-step: weighted complete-table update.
        cluster_mass = resp @ counts  # (J,)
        total = counts.sum()
        weights = np.maximum(cluster_mass / total, 0.0)
        weights /= weights.sum()
        occupied = cluster_mass > 0
        numer = (resp * counts[None, :]) @ bits  # (J, K)
        lambdas[occupied] = numer[occupied] / cluster_mass[occupied, None]
        np.clip(lambdas, lo, hi, out=lambdas)

        cell = _class_cell_matrix(lambdas, bits)
        updated = loglik(cell)
        if trace_out is not None:
            trace_out.append(updated)
        if updated - current <= config.rel_loglik_tol * abs(current):
            current = updated
            converged = True
            break
        current = updated

    model = LatentClassModel(weights, lambdas, require_distinct=False)
    pi0 = float(weights @ cell[:, 0])
    n_hat = n / (1.0 - pi0)
    return FitResult(
        model=model,
        cond_loglik=current,
        pi0_hat=pi0,
        n_hat=n_hat,
        n_hat_rounded=int(round(n_hat)),
        iterations=iterations,
        converged=converged,
        start_index=start_index,
        distinct_classes=model.has_distinct_classes,
    )


def em_trace(table: ContingencyTable, config: FitConfig, start_index: int = 0) -> list[float]:
    """Conditional log-likelihood after each outer iteration of one start.

    Exists so the nondecreasing-likelihood contract can be checked directly;
    entry 0 is the value at the random initialization.
    """
    trace: list[float] = []
    _em_start(table, config, start_index, trace_out=trace)
    return trace


def family_warnings(j: int, k: int) -> list[tuple[str, str]]:
    """(code, text) pairs describing family-level problems for (J, K)."""
    out: list[tuple[str, str]] = []
    if not is_identifiable(j, k).identifiable:
        out.append(
            (
                "NONIDENTIFIABLE_FAMILY",
                f"J={j} classes with K={k} sources violates 2J <= K: distinct "
                "models reproduce the observed cell distribution exactly while "
                "implying different population sizes; N estimates from this "
                "family are not determined by the data",
            )
        )
    if not parameter_bound_satisfied(j, k):
        out.append(
            (
                "OVERPARAMETERIZED",
                f"J(K+1)-1 = {j * (k + 1) - 1} free parameters exceed the "
                f"2^K-2 = {2**k - 2} observable degrees of freedom",
            )
        )
    return out


def fit_em(
    table: ContingencyTable, config: FitConfig, *, workers: int = 1
) -> list[FitResult]:
    """Run the EM fitter once per start; results ordered by start index.

    Start s draws its initialization from SeedSequence(seed, spawn_key=(s,)),
    so the output is reproducible regardless of worker count. Family-level
    problems ((J, K) nonidentifiable or overparameterized) are warnings,
    not errors: fitting a bad family is exactly what the probe studies.
    """
    if table.n == 0:
        raise DomainError("cannot fit a table with no observed individuals")
    for code, text in family_warnings(config.classes, table.k):
        category = (
            NonidentifiableFamilyWarning
            if code == "NONIDENTIFIABLE_FAMILY"
            else OverparameterizedWarning
        )
        warnings.warn(text, category, stacklevel=2)
    indices = range(config.starts)
    if workers <= 1:
        return [_em_start(table, config, s) for s in indices]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(lambda s: _em_start(table, config, s), indices))


def best_fit(results: list[FitResult]) -> FitResult:
    """Deterministic winner: highest log-likelihood, ties to lowest start."""
    return max(results, key=lambda r: (r.cond_loglik, -r.start_index))


@dataclass(frozen=True)
class FitCluster:
    """Multistart results whose log-likelihoods agree to a relative tolerance."""

    start_indices: tuple[int, ...]
    best_loglik: float
    n_hat_min: float
    n_hat_max: float
    rel_spread: float


@dataclass(frozen=True)
class ProbeReport:
    """Clustered multistart landscape plus the nonidentifiability flag.

    The flag fires when the top-likelihood cluster contains fits whose
    implied population sizes differ by more than ``spread_threshold``
    relatively -- equally good explanations of the data that disagree about
    N, which is the practical symptom of a nonidentifiable family.
    """

    results: tuple[FitResult, ...]
    clusters: tuple[FitCluster, ...]
    flagged: bool
    spread_threshold: float
    cluster_rel_tol: float


def _cluster(results: list[FitResult], rel_tol: float) -> list[FitCluster]:
    ordered = sorted(results, key=lambda r: (-r.cond_loglik, r.start_index))
    clusters: list[list[FitResult]] = []
    for res in ordered:
        if clusters:
            ref = clusters[-1][0].cond_loglik
            same = (
                res.cond_loglik == ref
                if np.isinf(ref)
                else abs(res.cond_loglik - ref) <= rel_tol * max(1.0, abs(ref))
            )
            if same:
                clusters[-1].append(res)
                continue
        clusters.append([res])
    out = []
    for members in clusters:
        n_hats = [m.n_hat for m in members]
        lo, hi = min(n_hats), max(n_hats)
        spread = (hi - lo) / lo if lo > 0 else 0.0
        out.append(
            FitCluster(
                start_indices=tuple(m.start_index for m in members),
                best_loglik=members[0].cond_loglik,
                n_hat_min=lo,
                n_hat_max=hi,
                rel_spread=spread,
            )
        )
    return out


def probe_nonidentifiability(
    table: ContingencyTable,
    config: FitConfig,
    *,
    spread_threshold: float = 0.05,
    cluster_rel_tol: float = 1e-6,
    workers: int = 1,
) -> ProbeReport:
    """Fit from many starts and flag likelihood-equivalent N disagreements.

    With a single start the report is trivially one cluster and the flag
    cannot fire; the probe is only informative with several starts.
    """
    if not spread_threshold > 0:
        raise DomainError(f"spread threshold must be > 0, got {spread_threshold}")
    results = fit_em(table, config, workers=workers)
    clusters = _cluster(results, cluster_rel_tol)
    flagged = bool(clusters and clusters[0].rel_spread > spread_threshold)
    return ProbeReport(
        results=tuple(results),
        clusters=tuple(clusters),
        flagged=flagged,
        spread_threshold=spread_threshold,
        cluster_rel_tol=cluster_rel_tol,
    )
