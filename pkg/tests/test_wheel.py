import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpb.noise import ChannelParams, circular_distance
from otpb.wheel import (bases_from_bitstring, basis_from_bits, bits_from_basis, constellation,
                        decode_with_basis, encode)

P16 = ChannelParams(100.0, 16)


def test_basis_from_bits_examples():
    assert basis_from_bits([0, 0, 0, 0]) == 0
    assert basis_from_bits([1, 0, 1], m=3) == 5
    assert basis_from_bits([1, 1, 1, 1], m=4) == 15
    with pytest.raises(ValueError):
        basis_from_bits([1, 0], m=3)
    with pytest.raises(ValueError):
        basis_from_bits([2, 0])


@given(st.integers(1, 16).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, 2 ** m - 1))))
def test_basis_bits_roundtrip(mk):
    m, k = mk
    assert basis_from_bits(bits_from_basis(k, m), m) == k


def test_bases_from_bitstring():
    bits = np.array([1, 0, 1, 0, 0, 0, 1, 1, 1], dtype=np.uint8)
    assert bases_from_bitstring(bits, 3).tolist() == [5, 0, 7]
    with pytest.raises(ValueError):
        bases_from_bitstring(bits[:8], 3)


@pytest.mark.parametrize("M", [2, 4, 16, 256])
def test_encode_anchor(M):
    p = ChannelParams(10.0, M)
    assert encode(0, 0, p) == 0.0
    assert encode(1, 0, p) == pytest.approx(math.pi)


def test_encode_range_checks():
    with pytest.raises(ValueError):
        encode(0, 16, P16)
    with pytest.raises(ValueError):
        encode(2, 0, P16)


def test_antipodal_and_alternating():
    for k in range(16):
        assert circular_distance(encode(0, k, P16), encode(1, k, P16)) == pytest.approx(math.pi)
    for k in range(15):
        # the same bit sits on opposite halves of neighbouring bases
        assert circular_distance(encode(0, k, P16), encode(0, k + 1, P16)) == pytest.approx(math.pi - math.pi / 16)


def test_nearest_neighbour_of_bit1_basis2():
    phases, bits, bases = constellation(P16)
    target = encode(1, 2, P16)
    d = circular_distance(phases, target)
    d[np.isclose(d, 0)] = np.inf
    nearest = np.flatnonzero(np.isclose(d, d.min()))
    assert d.min() == pytest.approx(math.pi / 16)
    for j in nearest:
        assert bits[j] == 0 and bases[j] in (1, 3)


def test_constellation_covers_wheel():
    phases, bits, bases = constellation(P16)
    assert phases.size == 32
    assert np.allclose(np.diff(phases), math.pi / 16)
    for ph, b, k in zip(phases, bits, bases):
        assert circular_distance(encode(int(b), int(k), P16), ph) < 1e-12
    # alternation breaks only at the two seams of an even wheel
    breaks = np.flatnonzero(bits == np.roll(bits, -1))
    assert breaks.tolist() == [15, 31]


def test_decode_roundtrip_and_perturbation():
    for k in range(16):
        for b in (0, 1):
            assert decode_with_basis(encode(b, k, P16), k, P16) == b
            assert decode_with_basis(encode(1, k, P16) + 0.4 * math.pi / 16, k, P16) == 1


def test_decode_tie_goes_to_zero():
    for k in range(16):
        mid = encode(0, k, P16) + math.pi / 2
        assert decode_with_basis(mid, k, P16) == 0


@given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.integers(0, 10 ** 6))
def test_vectorised_decode(bits, seed):
    bases = np.random.default_rng(seed).integers(0, 16, len(bits))
    out = decode_with_basis(encode(np.array(bits), bases, P16), bases, P16)
    assert np.array_equal(np.atleast_1d(out), bits)
