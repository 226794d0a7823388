"""Seeded generation of capture histories from a latent class model.

Sampling happens at the cell level: the full 2^K contingency table of a
closed population of size N is one multinomial draw over H, after which the
all-zero count is split off as ground truth the observer never sees. A
per-individual mode (draw a class per individual, then K Bernoulli
indicators) is available for K <= 10 as a distributional cross-check; it is
O(N K) instead of O(2^K).

Determinism contract: all randomness flows from numpy SeedSequence streams.
``simulate_table`` uses SeedSequence(seed); replicate r of
``simulate_replicates`` uses SeedSequence(seed, spawn_key=(r,)). The streams
are fixed by (seed, replicate index) alone, so results are bit-identical
across runs, execution orders, and worker counts, and golden tests can
reconstruct any replicate in isolation via ``replicate_stream``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidDimensionError
from .model import ContingencyTable, LatentClassModel, cell_probabilities

#: Per-individual sampling is a cross-check tool; its cost is O(N K) but the
#: bit-packing below keeps an int index per individual, so cap the width.
BERNOULLI_MAX_K = 10

METHODS = ("multinomial", "bernoulli")


@dataclass(frozen=True)
class SimulationSpec:
    """What to simulate: model, true population size, seed, and mechanism."""

    model: LatentClassModel
    popsize: int
    seed: int = 0
    method: str = "multinomial"

    def __post_init__(self):
        if not isinstance(self.popsize, (int, np.integer)) or self.popsize < 1:
            raise DomainError(f"population size must be an integer >= 1, got {self.popsize!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "bernoulli" and self.model.k > BERNOULLI_MAX_K:
            raise InvalidDimensionError(
                f"bernoulli mode is capped at K={BERNOULLI_MAX_K}, got K={self.model.k}"
            )
        object.__setattr__(self, "popsize", int(self.popsize))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SimulatedTable:
    """One realized table plus the unobservable all-zero count.

    ``true_missing`` is simulation-only ground truth; it never enters the
    table, matching what an analyst of real data would have.
    """

    table: ContingencyTable
    true_missing: int


def replicate_stream(seed: int, replicate: int) -> np.random.SeedSequence:
    """The documented stream for a replicate: SeedSequence(seed, spawn_key=(r,))."""
    return np.random.SeedSequence(seed, spawn_key=(replicate,))


def _draw_multinomial(model: LatentClassModel, n: int, rng: np.random.Generator) -> SimulatedTable:
    pv = cell_probabilities(model)
    # Guard the multinomial against 1-ulp drift in the probability sum.
    p = pv.full / pv.full.sum()
    counts = rng.multinomial(n, p)
    return SimulatedTable(ContingencyTable(model.k, counts[1:]), int(counts[0]))


def _draw_bernoulli(model: LatentClassModel, n: int, rng: np.random.Generator) -> SimulatedTable:
    classes = rng.choice(model.n_classes, size=n, p=model.weights)
    bits = rng.random((n, model.k)) < model.lambdas[classes]
    powers = 1 << np.arange(model.k - 1, -1, -1)
    indices = bits @ powers
    counts = np.bincount(indices, minlength=2**model.k)
    return SimulatedTable(ContingencyTable(model.k, counts[1:]), int(counts[0]))


def _draw(spec: SimulationSpec, stream: np.random.SeedSequence) -> SimulatedTable:
    rng = np.random.default_rng(stream)
    if spec.method == "bernoulli":
        return _draw_bernoulli(spec.model, spec.popsize, rng)
    return _draw_multinomial(spec.model, spec.popsize, rng)


def simulate_table(
    spec: SimulationSpec, *, stream: np.random.SeedSequence | None = None
) -> SimulatedTable:
    """One table of observed counts plus the realized missing count.

    Given the spec (or an explicit stream) the draw is fully deterministic.
    The observed counts and the missing count always sum to the population
    size exactly.
    """
    if stream is None:
        stream = np.random.SeedSequence(spec.seed)
    return _draw(spec, stream)


def simulate_replicates(
    spec: SimulationSpec, replicates: int, *, workers: int = 1
) -> list[SimulatedTable]:
    """Independent replicate tables, one per derived stream.

    Replicate r uses ``replicate_stream(spec.seed, r)``; the output list is
    ordered by replicate index, so the result does not depend on how many
    workers executed the draws.
    """
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise DomainError(f"replicates must be an integer >= 1, got {replicates!r}")
    streams = [replicate_stream(spec.seed, r) for r in range(int(replicates))]
    if workers <= 1:
        return [_draw(spec, s) for s in streams]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(lambda s: _draw(spec, s), streams))
