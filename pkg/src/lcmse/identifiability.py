"""Identifiability of J-class latent class families with K sources.

The family of J-class models (with per-source distinct class probabilities)
is identifiable exactly when 2J <= K: equal conditional cell probabilities
then force equal missing-cell mass, so the population size is determined by
the observable distribution. A weaker, necessary-only parameter-count bound
J(K+1) - 1 <= 2^K - 2 is also exposed; it compares free parameters to the
dimension of the conditional simplex.

When 2J > K the family is not identifiable, and this module constructs an
explicit witness: a pair of distinct models whose mixed moments are exact
positive multiples of each other (hence identical conditional cell
probabilities) while their missing-cell masses differ. For a scale alpha in
(0, 1/(2J)) the pair is

    nu_Q,j = binom(2J, 2j)   / (2^(2J-1) - 1),   lambda_Q,jk = alpha * 2j
    nu_R,j = binom(2J, 2j-1) / 2^(2J-1),         lambda_R,jk = alpha * (2j-1)

with moment ratio A = 2^(2J-1) / (2^(2J-1) - 1) != 1. Proportionality holds
because for every pattern weight t = |h| <= K < 2J the alternating sum
sum_i binom(2J, i) (-1)^i i^t vanishes (the t-th derivative at zero of
(1 - e^(a x))^(2J) is zero when t is below the root multiplicity 2J).

The positive direction rests on a product-structured matrix being full rank:
columns indexed by class probability vectors, rows by observable patterns,
entry prod_k lambda_k^h_k. ``build_lambda_matrix`` assembles that matrix for
a model pair and ``numerical_rank`` checks its rank by singular values; the
full-rank claim requires the column vectors to have pairwise distinct entries
within each source coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    RegimeError,
)
from .model import LatentClassModel, cell_probabilities
from .moments import _per_class_moments, moments_of_model
from .patterns import validate_source_count


@dataclass(frozen=True)
class IdentifiabilityDecision:
    classes: int
    sources: int
    identifiable: bool
    explanation: str


def _validate_jk(j: int, k: int) -> tuple[int, int]:
    if not isinstance(j, (int, np.integer)) or isinstance(j, bool) or j < 1:
        raise DomainError(f"class count must be an integer >= 1, got {j!r}")
    return int(j), validate_source_count(k)


def is_identifiable(j: int, k: int) -> IdentifiabilityDecision:
    """Decide identifiability of the J-class family with K sources.

    The criterion is 2J <= K, and it is both necessary and sufficient for
    the family with per-source distinct class probabilities.
    """
    j, k = _validate_jk(j, k)
    if 2 * j <= k:
        text = f"identifiable: 2J = {2 * j} <= K = {k}"
    else:
        text = (
            f"not identifiable: 2J = {2 * j} > K = {k}; an explicit pair of "
            "models with identical conditional cell probabilities but "
            "different missing-cell masses exists (see counterexample)"
        )
    return IdentifiabilityDecision(j, k, 2 * j <= k, text)


def parameter_bound_satisfied(j: int, k: int) -> bool:
    """Necessary-only parameter-count bound: J(K+1) - 1 <= 2^K - 2.

    A family with more free parameters than the conditional simplex has
    dimensions cannot be identifiable; passing this bound does NOT imply
    identifiability (the 2J <= K criterion is strictly stronger, e.g.
    J=3, K=5 passes here yet fails there).
    """
    j, k = _validate_jk(j, k)
    return j * (k + 1) - 1 <= 2**k - 2


@dataclass(frozen=True)
class CounterexamplePair:
    """A witness of nonidentifiability: m_Q = A * m_R with A != 1.

    Both models live in the same J-class family; their conditional cell
    probabilities coincide while the missing-cell masses differ, so no
    amount of observed data can distinguish them -- yet they imply
    different population sizes.
    """

    classes: int
    sources: int
    alpha: float
    q: LatentClassModel
    r: LatentClassModel
    moment_ratio: float

    @property
    def default_alpha_used(self) -> bool:
        return self.alpha == 0.9 / (2 * self.classes)


def default_alpha(j: int) -> float:
    """CLI default scale: 0.9/(2J), near the top of the open interval."""
    return 0.9 / (2 * j)


def counterexample(j: int, k: int, alpha: float | None = None) -> CounterexamplePair:
    """Construct the explicit nonidentifiable pair for 2J > K.

    Weights come from exact integer binomial coefficients (the even-index
    binomials of 2J sum to 2^(2J-1) - 1 after dropping binom(2J, 0), the
    odd-index ones to 2^(2J-1)), so each weight vector sums to 1 to the
    last bit before any renormalization.
    """
    j, k = _validate_jk(j, k)
    if 2 * j <= k:
        raise RegimeError(
            f"construction is not a counterexample here: 2J = {2 * j} <= K = {k}, "
            "the family is identifiable"
        )
    if alpha is None:
        alpha = default_alpha(j)
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0 / (2 * j):
        raise DomainError(
            f"alpha must lie in (0, 1/(2J)) = (0, {1.0 / (2 * j)}), got {alpha}"
        )
    even_total = 2 ** (2 * j - 1) - 1
    odd_total = 2 ** (2 * j - 1)
    w_q = np.array([math.comb(2 * j, 2 * i) / even_total for i in range(1, j + 1)])
    w_r = np.array([math.comb(2 * j, 2 * i - 1) / odd_total for i in range(1, j + 1)])
    lam_q = np.array([[alpha * (2 * i)] * k for i in range(1, j + 1)])
    lam_r = np.array([[alpha * (2 * i - 1)] * k for i in range(1, j + 1)])
    return CounterexamplePair(
        classes=j,
        sources=k,
        alpha=alpha,
        q=LatentClassModel(w_q, lam_q),
        r=LatentClassModel(w_r, lam_r),
        moment_ratio=odd_total / even_total,
    )


def reference_pair() -> CounterexamplePair:
    """The canonical two-source worked example (J=2, alpha=0.2475).

    Relabeled so that ``q`` is the equal-weights model: weights (0.5, 0.5)
    with per-source probabilities 0.2475 and 0.7425, against weights
    (6/7, 1/7) with 0.495 and 0.99. The two have identical conditional cell
    probabilities but missing masses 0.3163 vs 0.2186, and m_Q = 0.875 m_R.
    This pair anchors the golden tests and the verify-paper command.
    """
    pair = counterexample(2, 2, 0.2475)
    return CounterexamplePair(
        classes=pair.classes,
        sources=pair.sources,
        alpha=pair.alpha,
        q=pair.r,
        r=pair.q,
        moment_ratio=(2**3 - 1) / 2**3,  # exact reciprocal of the 8/7 above
    )


@dataclass(frozen=True)
class CounterexampleVerification:
    """Numerical audit of a counterexample pair.

    ``max_rel_moment_deviation`` is max over H* of |m_Q,h / (A m_R,h) - 1|;
    ``max_conditional_gap`` the largest componentwise difference of the two
    conditional vectors. A failing verification is reported, never raised.
    """

    tol: float
    moment_ratio: float
    max_rel_moment_deviation: float
    max_conditional_gap: float
    missing_mass_q: float
    missing_mass_r: float
    missing_mass_gap: float
    moments_proportional: bool
    conditionals_equal: bool
    missing_masses_differ: bool

    @property
    def passed(self) -> bool:
        return (
            self.moments_proportional
            and self.conditionals_equal
            and self.missing_masses_differ
        )


def verify_counterexample(
    pair: CounterexamplePair, tol: float = 1e-9
) -> CounterexampleVerification:
    """Check the three defining properties of a counterexample pair.

    (1) moments proportional with the constructed ratio, (2) conditional
    cell probability vectors equal, (3) missing-cell masses distinct.
    """
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    mq = moments_of_model(pair.q).values
    mr = moments_of_model(pair.r).values
    predicted = pair.moment_ratio * mr
    moment_dev = float(np.max(np.abs(mq / predicted - 1.0)))

    pv_q = cell_probabilities(pair.q)
    pv_r = cell_probabilities(pair.r)
    cond_gap = float(np.max(np.abs(pv_q.conditional() - pv_r.conditional())))
    gap = abs(pv_q.missing_mass - pv_r.missing_mass)

    return CounterexampleVerification(
        tol=tol,
        moment_ratio=pair.moment_ratio,
        max_rel_moment_deviation=moment_dev,
        max_conditional_gap=cond_gap,
        missing_mass_q=pv_q.missing_mass,
        missing_mass_r=pv_r.missing_mass,
        missing_mass_gap=float(gap),
        moments_proportional=moment_dev <= tol,
        conditionals_equal=cond_gap <= tol,
        missing_masses_differ=gap > 0.0,
    )


def alternating_binomial_sum(t: int, n: int) -> int:
    """sum_{i=1}^{n} binom(n, i) (-1)^i i^t, in exact integer arithmetic.

    Vanishes whenever t < n: it is the t-th derivative at x=0 of
    (1 - e^x)^n up to sign, and x=0 is a root of multiplicity n. This is
    the identity that makes the counterexample's moments proportional.
    """
    if not isinstance(t, (int, np.integer)) or isinstance(t, bool) or t < 1:
        raise DomainError(f"exponent t must be an integer >= 1, got {t!r}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise DomainError(f"order n must be an integer >= 1, got {n!r}")
    t, n = int(t), int(n)
    return sum(math.comb(n, i) * (-1) ** i * i**t for i in range(1, n + 1))


@dataclass(frozen=True, eq=False)
class LambdaMatrix:
    """The product-structured matrix whose rank settles the positive case.

    Columns are the class probability vectors of Q followed by the R classes
    that do not occur among Q's (indices ``i_r``); the row for pattern h
    holds prod_k lambda_k^h_k for each column vector. ``i_q`` records the
    symmetric set: Q classes absent from R.
    """

    k: int
    matrix: np.ndarray
    i_q: tuple[int, ...]
    i_r: tuple[int, ...]

    @property
    def n_unmatched(self) -> int:
        """m = |I_R|, the number of appended R columns."""
        return len(self.i_r)


def build_lambda_matrix(
    q: LatentClassModel, r: LatentClassModel, *, match_tol: float = 0.0
) -> LambdaMatrix:
    """Assemble the matrix for a model pair.

    Class membership (is this R class one of Q's?) uses exact equality of
    stored values by default, mirroring the set definitions; ``match_tol``
    allows fuzzy matching for perturbed inputs.
    """
    if q.k != r.k:
        raise DimensionMismatchError(f"models have K={q.k} and K={r.k}")

    def occurs(vec: np.ndarray, model: LatentClassModel) -> bool:
        for jj in range(model.n_classes):
            other = model.class_vector(jj)
            if match_tol == 0.0:
                if np.array_equal(vec, other):
                    return True
            elif np.max(np.abs(vec - other)) <= match_tol:
                return True
        return False

    i_q = tuple(j for j in range(q.n_classes) if not occurs(q.class_vector(j), r))
    i_r = tuple(j for j in range(r.n_classes) if not occurs(r.class_vector(j), q))

    columns = [_per_class_moments(q.class_vector(j))[1:] for j in range(q.n_classes)]
    columns += [_per_class_moments(r.class_vector(j))[1:] for j in i_r]
    return LambdaMatrix(q.k, np.column_stack(columns), i_q, i_r)


def numerical_rank(matrix: np.ndarray, rel_tol: float = 1e-10) -> int:
    """Rank as the number of singular values above rel_tol * sigma_max.

    A relative threshold is robust for the moderately conditioned
    product-structured matrices arising here, where absolute scales vary
    with K.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DomainError(f"rank needs a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    if not rel_tol > 0:
        raise DomainError(f"rel_tol must be positive, got {rel_tol}")
    sigma = np.linalg.svd(a, compute_uv=False)
    top = float(sigma[0])
    if top == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rel_tol * top))
