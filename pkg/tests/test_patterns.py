import numpy as np
import pytest

from lcmse import InclusionPattern, PatternOrder, enumerate_patterns
from lcmse.errors import InvalidDimensionError


def test_enumerate_k2():
    assert [p.bits for p in enumerate_patterns(2)] == [(0, 1), (1, 0), (1, 1)]


def test_enumerate_k3_canonical_order():
    # binary-digit order with the first source most significant
    assert [p.bits for p in enumerate_patterns(3)] == [
        (0, 0, 1),
        (0, 1, 0),
        (0, 1, 1),
        (1, 0, 0),
        (1, 0, 1),
        (1, 1, 0),
        (1, 1, 1),
    ]


@pytest.mark.parametrize("k", [2, 3, 5, 8])
def test_enumerate_length(k):
    patterns = enumerate_patterns(k)
    assert len(patterns) == 2**k - 1
    assert all(p.is_observed for p in patterns)
    # ascending and gap-free in index space
    assert [p.index for p in patterns] == list(range(1, 2**k))


@pytest.mark.parametrize("k", [0, 1, 21, 100])
def test_enumerate_rejects_bad_dimension(k):
    with pytest.raises(InvalidDimensionError):
        enumerate_patterns(k)


def test_pattern_bits_validation():
    with pytest.raises(InvalidDimensionError):
        InclusionPattern((0, 2))
    with pytest.raises(InvalidDimensionError):
        InclusionPattern((1,))


def test_pattern_roundtrips():
    p = InclusionPattern((1, 0, 1))
    assert p.index == 5
    assert p.bitstring == "101"
    assert InclusionPattern.from_index(3, 5) == p
    assert InclusionPattern.from_bitstring("101") == p
    assert not InclusionPattern((0, 0, 0)).is_observed


def test_order_bit_matrix_matches_patterns():
    order = PatternOrder(4)
    bits = order.bit_matrix()
    assert bits.shape == (15, 4)
    for row, pattern in zip(bits, order.observed_patterns()):
        assert tuple(int(b) for b in row) == pattern.bits
    full = order.bit_matrix(include_missing=True)
    assert full.shape == (16, 4)
    assert not full[0].any()


def test_observed_index():
    order = PatternOrder(3)
    assert order.observed_index(InclusionPattern.from_bitstring("001")) == 0
    assert order.observed_index(InclusionPattern.from_bitstring("111")) == 6
    with pytest.raises(InvalidDimensionError):
        order.observed_index(InclusionPattern((0, 0, 0)))
    with pytest.raises(InvalidDimensionError):
        order.observed_index(InclusionPattern((0, 1)))


def test_bit_matrix_is_readonly():
    bits = PatternOrder(3).bit_matrix()
    with pytest.raises(ValueError):
        bits[0, 0] = 1
    assert np.all(PatternOrder(3).bit_matrix() == bits)
