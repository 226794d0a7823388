import numpy as np
import pytest

from lcmse import (
    LatentClassModel,
    MomentVector,
    cell_probabilities,
    check_moment_proportionality,
    coefficient_matrix,
    conditional_probabilities,
    moments_from_pi,
    moments_of_model,
    pi_from_moments,
)
from lcmse.errors import DimensionMismatchError, InvalidDimensionError, InvalidModelError
from lcmse.moments import (
    DENSE_APPLY_MAX_K,
    _signed_superset_transform,
    _superset_sum_transform,
)

from conftest import random_model


class TestCoefficientMatrix:
    def test_k2_exact(self):
        # rows/cols ordered (0,1),(1,0),(1,1); evaluated by hand from the
        # sign-and-containment rule
        expected = np.array([[1, 0, -1], [0, 1, -1], [0, 0, 1]])
        assert np.array_equal(coefficient_matrix(2).dense, expected)

    @pytest.mark.parametrize("k", [2, 3, 4, 6])
    def test_structure(self, k):
        dense = coefficient_matrix(k).dense
        n = 2**k - 1
        assert dense.shape == (n, n)
        assert np.all(np.diag(dense) == 1)
        assert np.all(np.tril(dense, -1) == 0)
        assert set(np.unique(dense)) <= {-1, 0, 1}

    def test_entries_from_definition(self):
        # independent oracle: evaluate the sign/containment rule pairwise
        k = 4
        dense = coefficient_matrix(k).dense
        for r in range(1, 2**k):
            for c in range(1, 2**k):
                if r & c == r:
                    expected = (-1) ** (bin(c).count("1") - bin(r).count("1"))
                else:
                    expected = 0
                assert dense[r - 1, c - 1] == expected

    def test_determinant_is_one(self):
        assert np.linalg.det(coefficient_matrix(3).dense.astype(float)) == pytest.approx(1.0)

    def test_zero_when_not_contained(self):
        dense = coefficient_matrix(3).dense
        # h = (1,0,0) (index 4), h' = (0,1,1) (index 3): h_1 > h'_1
        assert dense[3, 2] == 0

    def test_dense_capped(self):
        with pytest.raises(InvalidDimensionError):
            coefficient_matrix(15).dense

    def test_dimension_errors(self):
        with pytest.raises(InvalidDimensionError):
            coefficient_matrix(1)
        with pytest.raises(InvalidDimensionError):
            coefficient_matrix(21)
        with pytest.raises(DimensionMismatchError):
            coefficient_matrix(2).apply(np.ones(4))

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_implicit_matches_dense(self, k):
        rng = np.random.default_rng(k)
        values = rng.uniform(0.1, 1.0, size=2**k - 1)
        dense = coefficient_matrix(k).dense.astype(float)
        assert np.allclose(
            _signed_superset_transform(
                np.concatenate([[0.0], values]), k
            )[1:],
            dense @ values,
            atol=1e-14,
        )
        rhs = rng.uniform(0.1, 1.0, size=2**k - 1)
        assert np.allclose(
            _superset_sum_transform(np.concatenate([[0.0], rhs]), k)[1:],
            np.linalg.solve(dense, rhs),
            atol=1e-12,
        )

    def test_large_k_uses_implicit_path(self):
        k = DENSE_APPLY_MAX_K + 3
        cm = coefficient_matrix(k)
        rng = np.random.default_rng(0)
        m = np.sort(rng.uniform(0.2, 0.9, size=2**k - 1))[::-1]
        out = cm.solve(cm.apply(m))
        assert np.max(np.abs(out - m)) < 1e-10


class TestMomentsOfModel:
    def test_single_class_product(self):
        a, b = 0.3, 0.8
        m = moments_of_model(LatentClassModel(np.array([1.0]), np.array([[a, b]])))
        assert m.values[0] == b  # pattern (0,1)
        assert m.values[1] == a  # pattern (1,0)
        assert m.values[2] == pytest.approx(a * b, abs=1e-16)

    def test_reference_q_first_moment(self, table_q):
        # 0.5*0.2475 + 0.5*0.7425 by hand
        assert moments_of_model(table_q).values[0] == pytest.approx(0.495, abs=1e-15)

    def test_reference_r_first_moment_and_ratio(self, table_q, table_r):
        mq = moments_of_model(table_q).values
        mr = moments_of_model(table_r).values
        assert mr[0] == pytest.approx(0.5657142857142857, abs=1e-12)
        assert mq[0] / mr[0] == pytest.approx(0.875, abs=1e-12)
        # the ratio equals the ratio of observable masses
        pq = cell_probabilities(table_q).missing_mass
        pr = cell_probabilities(table_r).missing_mass
        assert mq[0] / mr[0] == pytest.approx((1 - pq) / (1 - pr), abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_containment_monotonicity(self, seed):
        rng = np.random.default_rng(400 + seed)
        k = int(rng.integers(2, 7))
        model = random_model(rng, k, int(rng.integers(1, 5)))
        values = moments_of_model(model).values
        padded = np.concatenate([[1.0], values])
        for b in range(k):
            bit = 1 << b
            idx = np.arange(2**k)
            low = idx[(idx & bit) == 0]
            assert np.all(padded[low] >= padded[low | bit] - 1e-12)


class TestTransformRoundTrips:
    @pytest.mark.parametrize("seed", range(20))
    def test_oracle_equivalence(self, seed):
        # pi via the transform must match the definition-level computation
        rng = np.random.default_rng(500 + seed)
        model = random_model(rng, int(rng.integers(2, 7)), int(rng.integers(1, 5)))
        via_moments = pi_from_moments(moments_of_model(model))
        direct = cell_probabilities(model).observed
        assert np.max(np.abs(via_moments - direct)) <= 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip_identity(self, seed):
        rng = np.random.default_rng(600 + seed)
        model = random_model(rng, int(rng.integers(2, 7)), int(rng.integers(1, 5)))
        m = moments_of_model(model)
        back = moments_from_pi(pi_from_moments(m))
        assert np.max(np.abs(back.values - m.values)) <= 1e-12

    def test_reference_q_round_trip(self, table_q):
        star = cell_probabilities(table_q).observed
        assert np.max(
            np.abs(moments_from_pi(star).values - moments_of_model(table_q).values)
        ) <= 1e-12

    def test_point_mass_extreme(self):
        # all-ones moments <-> all mass on the full pattern
        assert np.allclose(pi_from_moments(MomentVector(2, np.ones(3))), [0.0, 0.0, 1.0])
        m = moments_from_pi(np.array([0.0, 0.0, 1.0]))
        assert np.array_equal(m.values, np.ones(3))

    def test_linearity(self):
        rng = np.random.default_rng(1)
        m1 = moments_of_model(random_model(rng, 3, 2))
        m2 = moments_of_model(random_model(rng, 3, 2))
        mixed = 0.4 * m1.values + 0.6 * m2.values
        combined = coefficient_matrix(3).apply(mixed)
        assert np.allclose(
            combined,
            0.4 * pi_from_moments(m1) + 0.6 * pi_from_moments(m2),
            atol=1e-14,
        )

    def test_rejects_impossible_slice(self):
        # mass only on a low pattern forces a zero moment above it
        with pytest.raises(InvalidModelError):
            moments_from_pi(np.array([1.0, 0.0, 0.0]))

    def test_rejects_non_power_length(self):
        with pytest.raises(DimensionMismatchError):
            moments_from_pi(np.array([0.2, 0.3, 0.1, 0.4]))


class TestProportionality:
    def test_reference_pair(self, table_q, table_r):
        res = check_moment_proportionality(
            moments_of_model(table_q), moments_of_model(table_r), tol=1e-9
        )
        assert res.proportional
        assert res.ratio == pytest.approx(0.875, abs=1e-12)

    def test_identical_vectors(self, table_q):
        m = moments_of_model(table_q)
        res = check_moment_proportionality(m, m)
        assert res.proportional and res.ratio == 1.0

    def test_unrelated_models(self, table_q):
        rng = np.random.default_rng(42)
        other = moments_of_model(random_model(rng, 2, 2))
        res = check_moment_proportionality(moments_of_model(table_q), other, tol=1e-9)
        assert not res.proportional
        assert res.ratio is None

    def test_dimension_mismatch(self, table_q):
        rng = np.random.default_rng(2)
        with pytest.raises(DimensionMismatchError):
            check_moment_proportionality(
                moments_of_model(table_q), moments_of_model(random_model(rng, 3, 2))
            )

    @pytest.mark.parametrize("seed", range(15))
    def test_equivalence_with_conditional_equality(self, seed):
        # proportional moments <=> equal conditional vectors, and the scale
        # equals the ratio of observable masses
        rng = np.random.default_rng(700 + seed)
        k = int(rng.integers(2, 6))
        a = random_model(rng, k, int(rng.integers(1, 4)))
        b = random_model(rng, k, int(rng.integers(1, 4)))
        pa, pb = cell_probabilities(a), cell_probabilities(b)
        cond_equal = bool(
            np.max(np.abs(conditional_probabilities(pa) - conditional_probabilities(pb)))
            <= 1e-10
        )
        res = check_moment_proportionality(
            moments_of_model(a), moments_of_model(b), tol=1e-9
        )
        assert res.proportional == cond_equal
        if res.proportional:
            expected = (1 - pa.missing_mass) / (1 - pb.missing_mass)
            assert res.ratio == pytest.approx(expected, abs=1e-10)
