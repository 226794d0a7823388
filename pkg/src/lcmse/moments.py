"""The cell-probability / mixed-moment transform.

For any mixing distribution, the observable cell probabilities depend on it
only through the mixed moments m_h = E prod_k lambda_k^h_k, h in H*.
Multiplying out every (1 - lambda_k) factor of a cell probability and
collecting terms by which extra sources they touch gives the
inclusion-exclusion identity

    pi_h = sum_{h' superset of h} (-1)^(|h'| - |h|) m_h',

i.e. pi* = C m with c_{h,h'} = (-1)^(sum_k h'_k - h_k) * prod_k 1{h_k <= h'_k}.
In the canonical order C is unit upper triangular over the integers, hence
invertible, and the inverse map is the plain superset sum
m_h = sum_{h' superset of h} pi_h'.

The matrix is materialized densely for K <= DENSE_MATERIALIZE_MAX_K; the
transform itself switches to an in-place subset-sum recursion (O(K 2^K),
no quadratic memory) above DENSE_APPLY_MAX_K so that K up to 20 stays cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, DomainError, InvalidDimensionError
from .model import LatentClassModel, MomentVector
from .patterns import validate_source_count

#: Largest K for which the dense (2^K-1)^2 integer matrix may be built.
DENSE_MATERIALIZE_MAX_K = 14

#: Largest K for which apply/solve go through the dense matrix; beyond this
#: the float cast of the dense matrix would dominate memory, so the
#: subset-sum recursion is used instead.
DENSE_APPLY_MAX_K = 12


def _signed_superset_transform(full: np.ndarray, k: int) -> np.ndarray:
    """In place over a length-2^K array: a_h <- sum_{h' >= h} (-1)^|h'\\h| a_h'."""
    idx = np.arange(2**k)
    for b in range(k):
        bit = 1 << b
        low = idx[(idx & bit) == 0]
        full[low] -= full[low | bit]
    return full


def _superset_sum_transform(full: np.ndarray, k: int) -> np.ndarray:
    """In place inverse of the signed transform: a_h <- sum_{h' >= h} a_h'."""
    idx = np.arange(2**k)
    for b in range(k):
        bit = 1 << b
        low = idx[(idx & bit) == 0]
        full[low] += full[low | bit]
    return full


@dataclass(frozen=True)
class CoefficientMatrix:
    """The (2^K-1) x (2^K-1) transform between moments and cell probabilities.

    ``dense`` holds exact int8 entries in {-1, 0, +1} and is only available
    for K <= DENSE_MATERIALIZE_MAX_K. ``apply`` and ``solve`` work for any
    supported K.
    """

    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", validate_source_count(self.k))

    @property
    def size(self) -> int:
        return 2**self.k - 1

    @cached_property
    def dense(self) -> np.ndarray:
        if self.k > DENSE_MATERIALIZE_MAX_K:
            raise InvalidDimensionError(
                f"dense coefficient matrix is capped at K={DENSE_MATERIALIZE_MAX_K}; "
                "use apply()/solve(), which run the implicit recursion"
            )
        n = self.size
        idx = np.arange(1, n + 1, dtype=np.int64)
        pop = np.array([int(i).bit_count() for i in idx], dtype=np.int64)
        out = np.zeros((n, n), dtype=np.int8)
        # Row at a time keeps peak memory at O(2^K) per row.
        for r in range(n):
            h = idx[r]
            mask = (h & idx) == h  # h is a subset of h'
            signs = np.where(((pop - pop[r]) % 2) == 0, 1, -1).astype(np.int8)
            out[r, mask] = signs[mask]
        out.setflags(write=False)
        return out

    def _embed(self, star: np.ndarray) -> np.ndarray:
        full = np.zeros(2**self.k, dtype=np.float64)
        full[1:] = star
        return full

    def apply(self, values: np.ndarray) -> np.ndarray:
        """C @ values for a length 2^K-1 vector in canonical H* order."""
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != self.size:
            raise DimensionMismatchError(
                f"expected {self.size} entries for K={self.k}, got {values.size}"
            )
        if self.k <= DENSE_APPLY_MAX_K:
            return np.asarray(self.dense, dtype=np.float64) @ values
        return _signed_superset_transform(self._embed(values), self.k)[1:]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """The unique x with C @ x = rhs (exact back-substitution for small K)."""
        rhs = np.asarray(rhs, dtype=np.float64).reshape(-1)
        if rhs.size != self.size:
            raise DimensionMismatchError(
                f"expected {self.size} entries for K={self.k}, got {rhs.size}"
            )
        if self.k <= DENSE_APPLY_MAX_K:
            return scipy.linalg.solve_triangular(
                np.asarray(self.dense, dtype=np.float64),
                rhs,
                lower=False,
                unit_diagonal=True,
            )
        return _superset_sum_transform(self._embed(rhs), self.k)[1:]


def coefficient_matrix(k: int) -> CoefficientMatrix:
    """The transform object for K sources (2 <= K <= 20)."""
    return CoefficientMatrix(k)


def _per_class_moments(lam_row: np.ndarray) -> np.ndarray:
    """prod_k lambda_k^h_k over all h in H, canonical order."""
    out = np.ones(1, dtype=np.float64)
    for lam in lam_row:
        out = np.kron(out, np.array([1.0, lam]))
    return out


def moments_of_model(model: LatentClassModel) -> MomentVector:
    """m_h = sum_j nu_j prod_k lambda_jk^h_k for every observable pattern."""
    from .model import mix_class_contributions

    rows = np.stack(
        [
            model.weights[j] * _per_class_moments(model.lambdas[j])
            for j in range(model.n_classes)
        ]
    )
    return MomentVector(model.k, mix_class_contributions(rows)[1:])


def _k_from_star_length(size: int) -> int:
    k = int(size + 1).bit_length() - 1
    if 2**k - 1 != size:
        raise DimensionMismatchError(
            f"length {size} is not 2^K - 1 for any source count K"
        )
    return validate_source_count(k)


def pi_from_moments(m: MomentVector) -> np.ndarray:
    """The H* slice of cell probabilities implied by a moment vector."""
    return coefficient_matrix(m.k).apply(m.values)


def moments_from_pi(pi_star: np.ndarray) -> MomentVector:
    """Invert the transform on an H* slice of cell probabilities.

    Round trip with ``pi_from_moments`` is the identity up to float
    accumulation. The result is validated as a moment vector, so a slice
    that cannot arise from any mixing distribution on (0, 1]^K is rejected.
    """
    pi_star = np.asarray(pi_star, dtype=np.float64).reshape(-1)
    k = _k_from_star_length(pi_star.size)
    return MomentVector(k, coefficient_matrix(k).solve(pi_star))


@dataclass(frozen=True)
class ProportionalityResult:
    """Outcome of testing m_Q = A * m_R across all observable patterns.

    ``ratio`` is the scale A (present only when proportional); it is taken
    from the first H* coordinate -- any coordinate would do since moments
    are strictly positive -- and every other coordinate is checked against
    it. ``max_rel_deviation`` is max_h |m_Q,h - A m_R,h| / m_R,h.
    """

    proportional: bool
    ratio: float | None
    max_rel_deviation: float
    tol: float


def check_moment_proportionality(
    mq: MomentVector, mr: MomentVector, tol: float = 1e-9
) -> ProportionalityResult:
    """Decide whether two moment vectors are positive multiples of each other.

    Equality of conditional cell probabilities between two mixing
    distributions is equivalent to their moment vectors being proportional,
    which makes this the computable identifiability probe for a model pair.
    """
    if mq.k != mr.k:
        raise DimensionMismatchError(f"moment vectors have K={mq.k} and K={mr.k}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    ratio = float(mq.values[0] / mr.values[0])
    deviation = float(np.max(np.abs(mq.values - ratio * mr.values) / mr.values))
    if deviation <= tol:
        return ProportionalityResult(True, ratio, deviation, tol)
    return ProportionalityResult(False, None, deviation, tol)
