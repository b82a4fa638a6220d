"""Stokes parameters, Schwinger angular-momentum moments, and the basis
resolution an eavesdropper can reach by measuring them.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .noise import BasisGrid  # noqa: F401  (re-exported)

POLE_EPS = 1e-12


class PoleError(ArithmeticError):
    def __init__(self, branch: str, denominator: float):
        super().__init__(f"tan extremum '{branch}' sits on a pole (denominator {denominator:.3g})")
        self.branch = branch
        self.denominator = denominator


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def polarization_defect(self) -> float:
        """``(s1^2 + s2^2 + s3^2) / s0^2 - 1``; zero for a fully polarized state."""
        return (self.s1 ** 2 + self.s2 ** 2 + self.s3 ** 2) / self.s0 ** 2 - 1.0


def stokes_from_components(a: float, b: float, phi: float) -> StokesVector:
    """Stokes vector of field amplitudes ``a`` (H) and ``b`` (V) with relative phase ``phi``."""
    if a < 0 or b < 0:
        raise ValueError("amplitudes must be non-negative")
    return StokesVector(a * a + b * b, a * a - b * b,
                        2 * a * b * math.cos(phi), 2 * a * b * math.sin(phi))


@dataclass(frozen=True)
class JMoments:
    """First moments ``<J_i>``, second moments ``<J_i J_k>`` (complex, i,k in x,y,z)
    and variances for the phase-modulated coherent state."""

    first: np.ndarray
    second: np.ndarray
    variances: np.ndarray

    def cross(self, i: str, k: str) -> complex:
        axes = "xyz"
        return complex(self.second[axes.index(i), axes.index(k)])


def j_moments(phi: float, n_mean: float) -> JMoments:
    if not n_mean > 0:
        raise ValueError("n_mean must be > 0")
    n = n_mean
    c, s = math.cos(phi), math.sin(phi)
    c2, s2 = math.cos(2 * phi), math.sin(2 * phi)
    first = np.array([n / 2 * c, n / 2 * s, 0.0])
    second = np.array([
        [n / 8 * (2 + n * (1 + c2)), n / 8 * s2, -1j * n / 4 * s],
        [n / 8 * s2, n / 8 * (2 + n * (1 - c2)), 1j * n / 4 * c],
        [1j * n / 4 * s, -1j * n / 4 * c, n],
    ], dtype=complex)
    # <J_x J_x> - <J_x>^2 with the n^2 terms cancelled before scaling:
    # n/4 + (n^2/8) [(1 + cos 2phi) - 2 cos^2 phi], and likewise for y
    variances = np.array([
        n / 4 + n * n / 8 * ((1 + c2) - 2 * c * c),
        n / 4 + n * n / 8 * ((1 - c2) - 2 * s * s),
        second[2, 2].real - first[2] ** 2,
    ])
    slack = 64 * sys.float_info.epsilon * (n * n + n)
    if abs(variances[0] - n / 4) > slack or abs(variances[1] - n / 4) > slack:
        raise ArithmeticError(f"variance identity violated: {variances[:2]} vs {n / 4}")
    return JMoments(first, second, variances)


def _perturbed(k: int, params):
    if not 0 <= k < params.num_bases:
        raise ValueError(f"basis {k} out of range")
    phi = math.pi * k / params.num_bases
    eps = 1.0 / math.sqrt(params.mean_photon_number)
    return phi, math.sin(phi), math.cos(phi), eps


def tan_extrema(k: int, params) -> tuple[float, float]:
    """``tan(phi_max) = (sin + e)/(cos - e)``, ``tan(phi_min) = (sin - e)/(cos + e)``,
    with ``phi = k pi/M`` and ``e = 1/sqrt(<n>)``.
    """
    _, s, c, eps = _perturbed(k, params)
    for branch, den in (("max", c - eps), ("min", c + eps)):
        if abs(den) < POLE_EPS:
            raise PoleError(branch, den)
    return (s + eps) / (c - eps), (s - eps) / (c + eps)


def delta_k_resolution(k: int, params) -> float:
    """Half-width, in basis units, of the phase band allowed by the noise.

    The band spans the angles of the four perturbed points
    ``(cos +- e, sin +- e)`` taken modulo pi around ``phi``; in the first
    quadrant its edges are exactly ``arctan`` of the two tan extrema.
    ``Delta k < 1`` means adjacent bases can be told apart.
    """
    tan_extrema(k, params)
    phi, s, c, eps = _perturbed(k, params)
    if abs(s) <= eps and abs(c) <= eps:
        return params.num_bases / 2.0
    sy = np.array([s + eps, s + eps, s - eps, s - eps])
    cx = np.array([c - eps, c + eps, c - eps, c + eps])
    rel = np.mod(np.arctan2(sy, cx) - phi + math.pi / 2, math.pi) - math.pi / 2
    return params.num_bases / math.pi * float(rel.max() - rel.min()) / 2.0


def extrema_table(params, ks=None) -> list[dict]:
    """Rows of ``k, tan(k pi/M), tan_max, tan_min, delta_k``; pole rows are skipped."""
    ks = range(params.num_bases) if ks is None else ks
    rows = []
    for k in ks:
        try:
            tmax, tmin = tan_extrema(k, params)
            dk = delta_k_resolution(k, params)
        except PoleError:
            continue
        rows.append({"k": k, "tan_phi": math.tan(math.pi * k / params.num_bases),
                     "tan_max": tmax, "tan_min": tmin, "delta_k": dk})
    return rows
