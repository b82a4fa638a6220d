import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpb.entropy import SeededEntropy
from otpb.noise import (BasisGrid, ChannelParams, circular_distance, detector_counts, overlap_magnitude_sq,
                        sample_measured_phase, sigma_phi, wrap_phase)

phases = st.floats(-50, 50, allow_nan=False)
photons = st.floats(0.01, 1e6)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(0.0, 8)
    with pytest.raises(ValueError):
        ChannelParams(10.0, 12)
    with pytest.raises(ValueError):
        ChannelParams(10.0, 1)
    with pytest.raises(ValueError):
        ChannelParams(10.0, 8, noise_variance_scale=-1)
    p = ChannelParams.from_bits(10.0, 5)
    assert p.num_bases == 32 and p.bits_per_basis == 5
    assert p.basis_spacing == pytest.approx(math.pi / 32)
    BasisGrid(700, 1000)
    with pytest.raises(ValueError):
        BasisGrid(0, 10)


def test_wrap_and_distance():
    assert wrap_phase(-1e-300) == 0.0 or wrap_phase(-1e-300) < 2 * math.pi
    assert wrap_phase(2 * math.pi) == 0.0
    assert circular_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
    assert circular_distance(0, math.pi) == pytest.approx(math.pi)


@given(phases, photons)
def test_overlap_identical_states(phi, n):
    assert overlap_magnitude_sq(phi, phi, ChannelParams(n, 2)) == 1.0


def test_overlap_antipodal():
    p = ChannelParams(100.0, 2)
    assert overlap_magnitude_sq(0.0, math.pi, p) == pytest.approx(math.exp(-200.0), rel=1e-12)


@pytest.mark.parametrize("n", [1.0, 100.0, 1e4])
def test_overlap_small_angle(n):
    p = ChannelParams(n, 2)
    for d in np.linspace(1e-5, 0.01, 25):
        # expansion of 1 - cos(d/2) = d^2/8 - ...; the quartic term bounds the error
        assert overlap_magnitude_sq(0.0, d, p) == pytest.approx(math.exp(-n * d * d / 4), rel=max(1e-12, n * d ** 4 / 96))


@given(phases, phases, photons)
def test_overlap_bounded_and_symmetric(a, b, n):
    p = ChannelParams(n, 2)
    v = overlap_magnitude_sq(a, b, p)
    assert 0.0 <= v <= 1.0
    assert v == overlap_magnitude_sq(b, a, p)
    assert overlap_magnitude_sq(a + 2 * math.pi, b, p) == pytest.approx(v, rel=1e-9, abs=1e-300)


def test_overlap_one_only_for_equal_phases():
    p = ChannelParams(50.0, 2)
    assert overlap_magnitude_sq(0.3, 0.3 + 4 * math.pi, p) == pytest.approx(1.0)
    assert overlap_magnitude_sq(0.3, 0.3 + 2 * math.pi + 1e-3, p) < 1.0


def test_sigma_values():
    assert sigma_phi(ChannelParams(0.5, 2)) == 1.0
    assert sigma_phi(ChannelParams(1000, 2)) == pytest.approx(0.0223606797749979, rel=1e-12)
    assert sigma_phi(ChannelParams(1000, 2, noise_variance_scale=4)) == pytest.approx(math.sqrt(2 / 1000))
    assert sigma_phi(ChannelParams(1000, 2, noise_variance_scale=0)) == 0.0


@given(st.floats(1e-3, 3.0), photons)
def test_sigma_consistent_with_overlap_exponent(d, n):
    s = sigma_phi(ChannelParams(n, 2))
    assert math.exp(-d * d / (2 * s * s)) == pytest.approx(math.exp(-n * d * d), rel=1e-9, abs=1e-300)


def test_sampler_noiseless_limit():
    p = ChannelParams(1.0, 4, noise_variance_scale=0)
    x = np.array([0.0, 1.0, 7.0])
    assert np.array_equal(sample_measured_phase(x, p, SeededEntropy(1)), wrap_phase(x))


def test_sampler_statistics():
    p = ChannelParams(100.0, 2)
    draws = sample_measured_phase(np.zeros(10 ** 6), p, SeededEntropy(7))
    eps = np.angle(np.exp(1j * draws))  # back to (-pi, pi]
    s = 1 / math.sqrt(200)
    assert abs(eps.mean()) < 4 * s / 1e3
    assert eps.std() == pytest.approx(s, rel=0.01)


def test_sampler_deterministic():
    p = ChannelParams(10.0, 8)
    a = sample_measured_phase(np.arange(50.0), p, SeededEntropy(3))
    b = sample_measured_phase(np.arange(50.0), p, SeededEntropy(3))
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 2 * math.pi))


def test_detector_counts_operating_point():
    r3 = math.sqrt(3)
    d0 = detector_counts(0.0, math.pi / 2, 100.0)
    assert d0.n_e == pytest.approx(25 * (2 - r3), rel=1e-12)
    assert d0.n_f == pytest.approx(25 * (2 + r3), rel=1e-12)
    assert d0.delta_i == pytest.approx(50 * r3, rel=1e-12)
    d1 = detector_counts(math.pi, math.pi / 2, 100.0)
    assert d1.n_e == pytest.approx(25 * (2 + r3), rel=1e-12)
    assert d1.delta_i == pytest.approx(-50 * r3, rel=1e-12)


@given(phases, phases, st.floats(0.1, 1e4))
def test_detector_photon_conservation(phi, delta, a2):
    d = detector_counts(phi, delta, a2)
    assert d.n_e + d.n_f == pytest.approx(a2, rel=1e-12)


def test_detector_gain_and_validation():
    d = detector_counts(0.3, 1.0, 10.0, gain=2.0, efficiency=0.5)
    ref = detector_counts(0.3, 1.0, 10.0)
    assert d.delta_i == pytest.approx(ref.delta_i)
    with pytest.raises(ValueError):
        detector_counts(0.0, 0.0, 0.0)
    arr = detector_counts(np.array([0.0, math.pi]), math.pi / 2, 100.0)
    assert arr.delta_i.shape == (2,)
