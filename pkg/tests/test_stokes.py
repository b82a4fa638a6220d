import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from otpb.noise import BasisGrid
from otpb.stokes import PoleError, delta_k_resolution, extrema_table, j_moments, stokes_from_components, tan_extrema


def test_stokes_examples():
    v = stokes_from_components(1.0, 0.0, 0.7)
    assert (v.s0, v.s1, v.s2, v.s3) == (1.0, 1.0, 0.0, 0.0)
    v = stokes_from_components(1 / math.sqrt(2), 1 / math.sqrt(2), math.pi / 2)
    assert (v.s0, v.s1, v.s2, v.s3) == pytest.approx((1.0, 0.0, 0.0, 1.0), abs=1e-15)
    with pytest.raises(ValueError):
        stokes_from_components(-1.0, 0.0, 0.0)


def test_polarised_identity_random():
    rng = np.random.default_rng(1)
    for a, b, phi in zip(rng.uniform(0, 10, 10_000), rng.uniform(0, 10, 10_000), rng.uniform(0, 2 * np.pi, 10_000)):
        assert abs(stokes_from_components(a, b, phi).polarization_defect()) < 1e-9


def test_moments_example():
    j = j_moments(0.0, 100.0)
    assert j.first.tolist() == [50.0, 0.0, 0.0]
    assert j.variances[0] == 25.0


def test_moment_relations_random():
    rng = np.random.default_rng(2)
    for phi, n in zip(rng.uniform(0, 2 * np.pi, 1000), 10 ** rng.uniform(-2, 6, 1000)):
        j = j_moments(phi, n)
        assert j.first[2] == 0.0
        assert j.cross("x", "y") == j.cross("y", "x")
        assert j.cross("x", "z") == -j.cross("z", "x")
        assert j.cross("y", "z") == -j.cross("z", "y")
        assert j.variances[2] == n
    with pytest.raises(ValueError):
        j_moments(0.0, 0.0)


def test_variance_identities_symbolic():
    n, phi = sp.symbols("n phi", positive=True)
    jx = n / 2 * sp.cos(phi)
    jy = n / 2 * sp.sin(phi)
    jxx = n / 8 * (2 + n * (1 + sp.cos(2 * phi)))
    jyy = n / 8 * (2 + n * (1 - sp.cos(2 * phi)))
    assert sp.simplify(jxx - jx ** 2 - n / 4) == 0
    assert sp.simplify(jyy - jy ** 2 - n / 4) == 0


def test_variance_identities_numeric_grid():
    for n in np.logspace(0, 3, 10):
        for phi in np.linspace(0, 2 * np.pi, 10, endpoint=False):
            v = j_moments(phi, n).variances
            assert v[0] == pytest.approx(n / 4, rel=1e-12)
            assert v[1] == pytest.approx(n / 4, rel=1e-12)
            assert v[2] == pytest.approx(n, rel=1e-12)


def test_variances_match_definition():
    j = j_moments(0.4, 37.0)
    raw = j.second.diagonal().real - j.first ** 2
    assert np.allclose(raw, j.variances, rtol=1e-12)


def test_tan_extrema_k0():
    n = 700.0
    e = 1 / math.sqrt(n)
    tmax, tmin = tan_extrema(0, BasisGrid(n, 1000))
    assert tmax == pytest.approx(e / (1 - e), rel=1e-14)
    assert tmin == pytest.approx(-e / (1 + e), rel=1e-14)


def test_tan_extrema_noiseless_limit():
    g = BasisGrid(1e12, 100)
    e = 1e-6
    for k in (0, 10, 30, 49, 70, 95):
        tmax, tmin = tan_extrema(k, g)
        phi = math.pi * k / 100
        t = math.tan(phi)
        # first-order deviation in e = 1/sqrt(<n>) is e (|sin| + |cos|) / cos^2
        bound = 1.001 * e * (abs(math.sin(phi)) + abs(math.cos(phi))) / math.cos(phi) ** 2
        assert abs(tmax - t) <= bound and abs(tmin - t) <= bound
    assert tan_extrema(0, g)[0] == pytest.approx(1e-6, rel=1e-5)


def test_pole_error():
    # cos(k pi / M) = 1/sqrt(<n>) exactly at k = M/3 with <n> = 4
    with pytest.raises(PoleError) as info:
        tan_extrema(1, BasisGrid(4.0, 3))
    assert info.value.branch == "max"
    with pytest.raises(ValueError):
        tan_extrema(5, BasisGrid(4.0, 3))


@given(st.floats(0.0, 0.74), st.floats(10.0, 1e8))
def test_tan_bracket_first_quadrant(frac, n):
    # tan is increasing on the quadrant, and (sin +- e)/(cos -+ e) stays there
    M = 10_000
    k = int(frac * M)
    g = BasisGrid(n, M)
    phi = math.pi * k / M
    e = 1 / math.sqrt(n)
    if math.cos(phi) - e <= 1e-9:
        return
    tmax, tmin = tan_extrema(k, g)
    assert tmin <= math.tan(phi) <= tmax


def test_delta_k_verdicts():
    wide = BasisGrid(700, 1000)
    for k in range(300, 701, 25):
        assert delta_k_resolution(k, wide) > 1
    sharp = BasisGrid(1e12, 100)
    for k in range(0, 100, 7):
        try:
            assert delta_k_resolution(k, sharp) < 1e-3
        except PoleError:
            pass


def test_delta_k_matches_arctan_rule_first_quadrant():
    g = BasisGrid(700, 1000)
    for k in (50, 100, 150, 200):
        tmax, tmin = tan_extrema(k, g)
        ref = 1000 / math.pi * (math.atan(tmax) - math.atan(tmin)) / 2
        assert delta_k_resolution(k, g) == pytest.approx(ref, rel=1e-12)


def test_delta_k_monotone():
    for frac in (0.1, 0.37, 0.6):
        vals = [delta_k_resolution(int(frac * M), BasisGrid(700, M)) for M in (100, 200, 400, 1000, 2000)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
    vals = [delta_k_resolution(120, BasisGrid(n, 1000)) for n in (1e2, 1e3, 1e4, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_delta_k_saturates_when_noise_covers_origin():
    assert delta_k_resolution(0, BasisGrid(0.5, 10)) == 5.0


def test_extrema_table_skips_poles():
    # k=1: cos - e = 0, k=2: cos + e = 0
    rows = extrema_table(BasisGrid(4.0, 3))
    assert [r["k"] for r in rows] == [0]
    rows = extrema_table(BasisGrid(700, 1000), range(0, 1000, 100))
    assert len(rows) == 10 and set(rows[0]) == {"k", "tan_phi", "tan_max", "tan_min", "delta_k"}
