"""Shared fixtures: the canonical two-source model pair and random models.

``table_q`` / ``table_r`` name the two-class, two-source models with
identical conditional cell probabilities: Q has weights (1/2, 1/2) and flat
per-source probabilities 0.2475 / 0.7425, R has weights (6/7, 1/7) with
0.495 / 0.99. Their missing masses are 0.31628125 and 0.2186071...
"""

import numpy as np
import pytest

from lcmse import LatentClassModel


@pytest.fixture(scope="session")
def table_q() -> LatentClassModel:
    return LatentClassModel(
        np.array([0.5, 0.5]),
        np.array([[0.2475, 0.2475], [0.7425, 0.7425]]),
    )


@pytest.fixture(scope="session")
def table_r() -> LatentClassModel:
    return LatentClassModel(
        np.array([6 / 7, 1 / 7]),
        np.array([[0.495, 0.495], [0.99, 0.99]]),
    )


def random_model(rng: np.random.Generator, k: int, j: int) -> LatentClassModel:
    """A valid random model: Dirichlet-ish weights, well-separated lambdas."""
    weights = rng.dirichlet(np.ones(j))
    # rejection keeps per-source values distinct (required by the family)
    lambdas = np.empty((j, k))
    for col in range(k):
        while True:
            vals = rng.uniform(0.05, 0.95, size=j)
            if np.unique(vals).size == j:
                lambdas[:, col] = vals
                break
    return LatentClassModel(weights, lambdas)


def disjoint_pair(rng: np.random.Generator, k: int, j: int, shared: int):
    """Random (Q, R) with ``shared`` common classes and all per-source values
    pairwise distinct across the union of class vectors; a minimum gap keeps
    the downstream rank computation well-conditioned."""
    m = j - shared
    total = j + m
    cols = np.empty((total, k))
    for source in range(k):
        while True:
            vals = rng.uniform(0.05, 0.95, size=total)
            if total == 1 or np.min(np.diff(np.sort(vals))) > 0.02:
                cols[:, source] = vals
                break
    q = LatentClassModel(rng.dirichlet(np.ones(j)), cols[:j])
    r_rows = np.vstack([cols[:shared], cols[j:]])
    r = LatentClassModel(rng.dirichlet(np.ones(j)), r_rows)
    return q, r


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion lines whether or not -s was used."""
    try:
        from test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
