import numpy as np
import pytest
import scipy.stats

from lcmse import (
    LatentClassModel,
    SimulationSpec,
    cell_probabilities,
    replicate_stream,
    simulate_replicates,
    simulate_table,
)
from lcmse.errors import DomainError, InvalidDimensionError


def certain_capture(k=2):
    return LatentClassModel(np.array([1.0]), np.ones((1, k)))


class TestSimulateTable:
    def test_certain_capture(self):
        out = simulate_table(SimulationSpec(certain_capture(), popsize=1000, seed=3))
        assert out.table.counts[-1] == 1000
        assert out.table.n == 1000
        assert out.true_missing == 0

    def test_same_seed_same_table(self, table_q):
        spec = SimulationSpec(table_q, popsize=5000, seed=11)
        a, b = simulate_table(spec), simulate_table(spec)
        assert np.array_equal(a.table.counts, b.table.counts)
        assert a.true_missing == b.true_missing

    def test_seed_changes_table(self, table_q):
        a = simulate_table(SimulationSpec(table_q, popsize=5000, seed=11))
        b = simulate_table(SimulationSpec(table_q, popsize=5000, seed=12))
        assert not np.array_equal(a.table.counts, b.table.counts)

    @pytest.mark.parametrize("method", ["multinomial", "bernoulli"])
    @pytest.mark.parametrize("seed", range(5))
    def test_counts_plus_missing_is_popsize(self, table_q, method, seed):
        spec = SimulationSpec(table_q, popsize=777, seed=seed, method=method)
        out = simulate_table(spec)
        assert out.table.n + out.true_missing == 777

    def test_empirical_frequencies_match_model(self, table_q):
        # every cell (missing included) within 4 standard errors at N = 1e6
        n = 10**6
        out = simulate_table(SimulationSpec(table_q, popsize=n, seed=0))
        pi = cell_probabilities(table_q).full
        observed = np.concatenate([[out.true_missing], out.table.counts]) / n
        se = np.sqrt(pi * (1 - pi) / n)
        assert np.all(np.abs(observed - pi) <= 4 * se)

    def test_chi_square_gof_at_scale(self, table_q):
        n = 10**6
        out = simulate_table(SimulationSpec(table_q, popsize=n, seed=0))
        counts = np.concatenate([[out.true_missing], out.table.counts])
        expected = n * cell_probabilities(table_q).full
        result = scipy.stats.chisquare(counts, f_exp=expected)
        assert result.pvalue > 0.001

    def test_bernoulli_dimension_cap(self):
        model = certain_capture(k=11)
        with pytest.raises(InvalidDimensionError):
            SimulationSpec(model, popsize=10, seed=0, method="bernoulli")

    def test_spec_validation(self, table_q):
        with pytest.raises(DomainError):
            SimulationSpec(table_q, popsize=0, seed=0)
        with pytest.raises(DomainError):
            SimulationSpec(table_q, popsize=10, seed=-1)
        with pytest.raises(DomainError):
            SimulationSpec(table_q, popsize=10, seed=2**64)
        with pytest.raises(DomainError):
            SimulationSpec(table_q, popsize=10, seed=0, method="exact")


class TestReplicates:
    def test_singleton_equals_derived_stream(self, table_q):
        spec = SimulationSpec(table_q, popsize=2000, seed=9)
        only = simulate_replicates(spec, 1)[0]
        direct = simulate_table(spec, stream=replicate_stream(9, 0))
        assert np.array_equal(only.table.counts, direct.table.counts)
        assert only.true_missing == direct.true_missing

    def test_reproducible_across_runs_and_workers(self, table_q):
        spec = SimulationSpec(table_q, popsize=1000, seed=21)
        serial = simulate_replicates(spec, 64)
        again = simulate_replicates(spec, 64)
        threaded = simulate_replicates(spec, 64, workers=4)
        for a, b, c in zip(serial, again, threaded):
            assert np.array_equal(a.table.counts, b.table.counts)
            assert np.array_equal(a.table.counts, c.table.counts)
            assert a.true_missing == b.true_missing == c.true_missing

    def test_replicates_differ_from_each_other(self, table_q):
        spec = SimulationSpec(table_q, popsize=1000, seed=21)
        tables = simulate_replicates(spec, 8)
        distinct = {tuple(t.table.counts.tolist()) for t in tables}
        assert len(distinct) > 1

    def test_monte_carlo_mean(self, table_q):
        # mean frequency of the both-sources cell across 200 replicates
        n, reps = 10**4, 200
        spec = SimulationSpec(table_q, popsize=n, seed=5)
        tables = simulate_replicates(spec, reps)
        freq = np.array([t.table.counts[2] / n for t in tables])
        p = cell_probabilities(table_q).full[3]
        se = np.sqrt(p * (1 - p) / n) / np.sqrt(reps)
        assert abs(freq.mean() - p) <= 3 * se

    def test_replicate_count_validation(self, table_q):
        spec = SimulationSpec(table_q, popsize=10, seed=0)
        with pytest.raises(DomainError):
            simulate_replicates(spec, 0)


class TestBernoulliCrossCheck:
    def test_modes_agree_in_distribution(self, table_q):
        # pooled counts from 200 replicates at N = 1e4 per mode, compared by
        # a two-sample chi-square on the full table (missing cell included)
        n, reps = 10**4, 200
        pooled = {}
        for method in ("multinomial", "bernoulli"):
            spec = SimulationSpec(table_q, popsize=n, seed=17, method=method)
            tables = simulate_replicates(spec, reps)
            pooled[method] = np.array(
                [sum(t.true_missing for t in tables)]
                + list(np.sum([t.table.counts for t in tables], axis=0))
            )
        stacked = np.vstack([pooled["multinomial"], pooled["bernoulli"]])
        _, pvalue, _, _ = scipy.stats.chi2_contingency(stacked)
        assert pvalue > 0.001

    def test_bernoulli_deterministic(self, table_q):
        spec = SimulationSpec(table_q, popsize=500, seed=13, method="bernoulli")
        a, b = simulate_table(spec), simulate_table(spec)
        assert np.array_equal(a.table.counts, b.table.counts)
