"""Latent class models and their cell probabilities.

A J-class latent class model stratifies a closed population into J classes.
Class j has weight nu_j and, for each source k, a sampling probability
lambda_jk in (0, 1]. Conditional on class membership the K sources sample an
individual independently, so the probability of inclusion pattern h is

    pi_h = sum_j nu_j * prod_k lambda_jk^h_k * (1 - lambda_jk)^(1 - h_k).

``cell_probabilities`` evaluates this definition directly; it is the oracle
the moment-transform route is checked against and deliberately does not share
code with it.

All types here are immutable after construction and all functions are pure,
so everything is safe to share across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateModelError,
    DimensionMismatchError,
    DistinctnessWarning,
    InvalidModelError,
    InvalidTableError,
)
from .patterns import PatternOrder, validate_source_count

#: Input weights may miss the simplex by up to this much (text-format
#: round-off); they are then renormalized. Larger violations are rejected.
WEIGHT_SUM_TOL = 1e-12

#: Probability vectors over H must sum to 1 within this.
PROB_SUM_TOL = 1e-12

#: Slack for float accumulation when checking moment monotonicity.
MOMENT_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatentClassModel:
    """A discrete mixing distribution: J point masses on (0, 1]^K.

    weights
        Class weights nu_1..nu_J. Must be nonnegative and sum to 1 within
        ``WEIGHT_SUM_TOL``; they are renormalized to an exact float sum.
    lambdas
        J x K matrix of per-class per-source sampling probabilities, each in
        (0, 1]. Strict positivity means every individual is catchable.
    require_distinct
        The family membership restriction demands lambda_jk != lambda_j'k
        for j != j' at every source k (exact comparison of stored values).
        With ``require_distinct=False`` a violation only emits
        ``DistinctnessWarning`` -- fitted models may legitimately sit on the
        boundary where classes merge.
    """

    weights: np.ndarray
    lambdas: np.ndarray
    require_distinct: bool = field(default=True, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        lam = np.atleast_2d(np.array(self.lambdas, dtype=np.float64))
        if w.size == 0:
            raise InvalidModelError("model needs at least one class")
        if lam.shape[0] != w.size:
            raise InvalidModelError(
                f"{w.size} weights but {lam.shape[0]} lambda rows"
            )
        validate_source_count(lam.shape[1])
        if not np.all(np.isfinite(w)):
            raise InvalidModelError("weights must be finite")
        if np.any(w < 0):
            raise InvalidModelError(f"weights must be nonnegative, got {w.tolist()}")
        total = float(w.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidModelError(f"weights sum to {total!r}, not 1")
        w = w / total
        # Push the float sum to exactly 1.0 by absorbing the residual into
        # the largest weight; keeps downstream tolerance budgets clean.
        w[int(np.argmax(w))] += 1.0 - float(w.sum())

        if not np.all(np.isfinite(lam)):
            raise InvalidModelError("sampling probabilities must be finite")
        if np.any(lam <= 0) or np.any(lam > 1):
            bad = np.argwhere((lam <= 0) | (lam > 1))[0]
            raise InvalidModelError(
                f"sampling probability lambda[{bad[0]},{bad[1]}]={lam[bad[0], bad[1]]!r} "
                "is outside (0, 1]"
            )
        if w.size > 1:
            for k in range(lam.shape[1]):
                col = lam[:, k]
                if np.unique(col).size != col.size:
                    msg = (
                        f"classes share a sampling probability for source {k + 1}: "
                        f"{col.tolist()}"
                    )
                    if self.require_distinct:
                        raise InvalidModelError(msg)
                    warnings.warn(msg, DistinctnessWarning, stacklevel=3)
                    break

        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "lambdas", _readonly(lam))

    @property
    def n_classes(self) -> int:
        return int(self.weights.size)

    @property
    def k(self) -> int:
        return int(self.lambdas.shape[1])

    @property
    def has_distinct_classes(self) -> bool:
        """True when every source separates every pair of classes exactly."""
        if self.n_classes == 1:
            return True
        return all(
            np.unique(self.lambdas[:, k]).size == self.n_classes
            for k in range(self.k)
        )

    def class_vector(self, j: int) -> np.ndarray:
        """The sampling-probability vector of class j (0-based)."""
        return self.lambdas[j]


@dataclass(frozen=True, eq=False)
class CellProbabilityVector:
    """Cell probabilities pi_h for every h in H, in canonical order.

    Entry 0 is the missing-cell mass pi_0 (the all-zero pattern). Accessors
    expose the observable slice over H* and the conditional vector
    pi~_h = pi_h / (1 - pi_0).
    """

    k: int
    full: np.ndarray

    def __post_init__(self):
        k = validate_source_count(self.k)
        v = np.array(self.full, dtype=np.float64).reshape(-1)
        if v.size != 2**k:
            raise DimensionMismatchError(f"expected 2^{k} entries, got {v.size}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidModelError("cell probabilities must be finite and >= 0")
        if abs(float(v.sum()) - 1.0) > PROB_SUM_TOL:
            raise InvalidModelError(
                f"cell probabilities sum to {float(v.sum())!r}, not 1"
            )
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "full", _readonly(v))

    @property
    def missing_mass(self) -> float:
        """pi_0, the probability of never being sampled."""
        return float(self.full[0])

    @property
    def observed(self) -> np.ndarray:
        """The H* slice (pi_h for observable h); sums to 1 - pi_0."""
        return self.full[1:]

    def conditional(self) -> np.ndarray:
        """pi~ over H*: the observable cells renormalized to sum to 1."""
        denom = 1.0 - self.missing_mass
        if denom <= 0.0:
            raise DegenerateModelError(
                "missing-cell mass is 1: no pattern is ever observed"
            )
        return self.observed / denom


def _per_class_cell_probs(lam_row: np.ndarray) -> np.ndarray:
    """prod_k lambda_k^h_k (1-lambda_k)^(1-h_k) over all h, canonical order."""
    out = np.ones(1, dtype=np.float64)
    for lam in lam_row:
        out = np.kron(out, np.array([1.0 - lam, lam]))
    return out


def mix_class_contributions(rows: np.ndarray) -> np.ndarray:
    """Sum per-class contribution rows in a canonical (sorted) order.

    Summing in class order would make the result depend on how classes are
    labeled, because float addition rounds differently per order; sorting
    each cell's contributions first makes relabeling a bit-exact no-op.
    """
    if rows.shape[0] == 1:
        return rows[0].copy()
    ordered = np.sort(rows, axis=0)
    return ordered.sum(axis=0)


def cell_probabilities(model: LatentClassModel) -> CellProbabilityVector:
    """Evaluate the defining mixture formula for every cell of H.

    This is the definition-level oracle: a weighted sum over classes of
    products of per-source Bernoulli factors, with no detour through moments.
    """
    rows = np.stack(
        [
            model.weights[j] * _per_class_cell_probs(model.lambdas[j])
            for j in range(model.n_classes)
        ]
    )
    return CellProbabilityVector(model.k, mix_class_contributions(rows))


def conditional_probabilities(pv: CellProbabilityVector) -> np.ndarray:
    """pi~_h = pi_h / (1 - pi_0) over H*; raises if pi_0 = 1."""
    return pv.conditional()


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Mixed moments m_h = E prod_k lambda_k^h_k for h in H*.

    Moments of a model are strictly positive (products of strictly positive
    probabilities) and monotone under bit-set containment: adding a source to
    the pattern can only shrink the expectation.
    """

    k: int
    values: np.ndarray

    def __post_init__(self):
        k = validate_source_count(self.k)
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size != 2**k - 1:
            raise DimensionMismatchError(f"expected 2^{k}-1 entries, got {v.size}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0) or np.any(v > 1 + MOMENT_TOL):
            raise InvalidModelError("moments must lie in (0, 1]")
        padded = np.concatenate([[1.0], v])  # the empty product has moment 1
        for b in range(k):
            bit = 1 << b
            idx = np.arange(2**k)
            lower = idx[(idx & bit) == 0]
            if np.any(padded[lower] < padded[lower | bit] - MOMENT_TOL):
                raise InvalidModelError(
                    "moments are not monotone under pattern containment"
                )
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", _readonly(v))


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Observed counts n_h for every h in H*, in canonical order.

    All 2^K - 1 observable cells are present (zeros allowed); the all-zero
    cell has no entry by construction -- it is never observed.
    """

    k: int
    counts: np.ndarray

    def __post_init__(self):
        k = validate_source_count(self.k)
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size != 2**k - 1:
            raise InvalidTableError(
                f"expected 2^{k}-1 = {2**k - 1} counts, got shape {c.shape}"
            )
        if not np.issubdtype(c.dtype, np.integer):
            rounded = np.rint(np.asarray(c, dtype=np.float64))
            if not np.array_equal(rounded, np.asarray(c, dtype=np.float64)):
                raise InvalidTableError("counts must be integers")
            c = rounded
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise InvalidTableError("counts must be nonnegative")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "counts", _readonly(c))

    @property
    def n(self) -> int:
        """Total observed count n = sum over H* of n_h."""
        return int(self.counts.sum())

    def count_of(self, bitstring: str) -> int:
        from .patterns import InclusionPattern

        index = PatternOrder(self.k).observed_index(
            InclusionPattern.from_bitstring(bitstring)
        )
        return int(self.counts[index])
