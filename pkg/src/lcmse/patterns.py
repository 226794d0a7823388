"""Inclusion patterns and their canonical order.

An inclusion pattern is a length-K bit vector recording which of the K
sources sampled an individual. H is the set of all 2^K patterns; H* excludes
the all-zero pattern, which is never observed. Every vector or matrix in this
package that is indexed by H or H* uses the same order: patterns sorted as
binary numbers with bit 1 most significant, so for K=3 the order of H is
(0,0,0), (0,0,1), (0,1,0), (0,1,1), (1,0,0), (1,0,1), (1,1,0), (1,1,1) and
H* drops the first entry.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError

MIN_SOURCES = 2
# Dense vectors over H have 2^K entries; capping K keeps them comfortably in
# memory instead of letting a typo thrash the machine.
MAX_SOURCES = 20


def validate_source_count(k: int) -> int:
    """Check 2 <= K <= 20 and return K as a plain int."""
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InvalidDimensionError(f"source count must be an integer, got {k!r}")
    k = int(k)
    if k < MIN_SOURCES or k > MAX_SOURCES:
        raise InvalidDimensionError(
            f"source count must be in [{MIN_SOURCES}, {MAX_SOURCES}], got {k}"
        )
    return k


@dataclass(frozen=True)
class InclusionPattern:
    """One length-K bit vector h = (h_1, ..., h_K).

    ``bits[0]`` is source 1 and is the most significant digit in the
    canonical order. The all-zero pattern is representable (it indexes the
    missing cell) but is excluded from H*.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.bits, tuple):
            object.__setattr__(self, "bits", tuple(self.bits))
        validate_source_count(len(self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidDimensionError(f"pattern bits must be 0 or 1, got {self.bits}")
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))

    @property
    def k(self) -> int:
        return len(self.bits)

    @property
    def is_observed(self) -> bool:
        """True if at least one source sampled the individual (h in H*)."""
        return any(self.bits)

    @property
    def index(self) -> int:
        """Position in the canonical order of H (the bits read as binary)."""
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value

    @property
    def bitstring(self) -> str:
        """The pattern as a K-character '0'/'1' string in source order."""
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_index(cls, k: int, index: int) -> "InclusionPattern":
        k = validate_source_count(k)
        if not 0 <= index < 2**k:
            raise InvalidDimensionError(f"pattern index {index} out of range for K={k}")
        return cls(tuple((index >> (k - 1 - i)) & 1 for i in range(k)))

    @classmethod
    def from_bitstring(cls, s: str) -> "InclusionPattern":
        if set(s) - {"0", "1"}:
            raise InvalidDimensionError(f"bitstring must contain only '0'/'1', got {s!r}")
        return cls(tuple(int(c) for c in s))

    def __str__(self) -> str:
        return self.bitstring


@functools.lru_cache(maxsize=None)
def _bit_matrix_full(k: int) -> np.ndarray:
    """(2^K, K) matrix of bits; row i is the pattern with index i."""
    idx = np.arange(2**k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    bits = bits.astype(np.int8)
    bits.setflags(write=False)
    return bits


@dataclass(frozen=True)
class PatternOrder:
    """The canonical enumeration of H (and H*) for a given source count."""

    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", validate_source_count(self.k))

    @property
    def n_cells(self) -> int:
        """|H| = 2^K."""
        return 2**self.k

    @property
    def n_observable(self) -> int:
        """|H*| = 2^K - 1."""
        return 2**self.k - 1

    def bit_matrix(self, include_missing: bool = False) -> np.ndarray:
        """Rows of pattern bits in canonical order; H* unless asked for H."""
        full = _bit_matrix_full(self.k)
        return full if include_missing else full[1:]

    def all_patterns(self) -> list[InclusionPattern]:
        return [InclusionPattern.from_index(self.k, i) for i in range(self.n_cells)]

    def observed_patterns(self) -> list[InclusionPattern]:
        return [InclusionPattern.from_index(self.k, i) for i in range(1, self.n_cells)]

    def observed_index(self, pattern: InclusionPattern) -> int:
        """Position of an observed pattern within H* (0-based)."""
        if pattern.k != self.k:
            raise InvalidDimensionError(
                f"pattern has K={pattern.k}, order has K={self.k}"
            )
        if not pattern.is_observed:
            raise InvalidDimensionError("the all-zero pattern is not in H*")
        return pattern.index - 1

    def bitstrings(self, include_missing: bool = False) -> list[str]:
        start = 0 if include_missing else 1
        return [
            format(i, f"0{self.k}b") for i in range(start, self.n_cells)
        ]


def enumerate_patterns(k: int) -> list[InclusionPattern]:
    """All 2^K - 1 observable patterns, ascending in the canonical order."""
    return PatternOrder(k).observed_patterns()
