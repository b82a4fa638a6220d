"""Phase-noise mathematics of a mesoscopic coherent state.

Phases are plain floats (or numpy arrays) in radians; :func:`wrap_phase`
reduces them to ``[0, 2*pi)`` and :func:`circular_distance` compares them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import EntropySource

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChannelParams:
    """Operating point of the noisy channel.

    Parameters
    ----------
    mean_photon_number : float
        Mean photon number per bit signal, equal to ``|alpha|**2``.
    num_bases : int
        Number of phase bases ``M``; must be a power of two.
    noise_variance_scale : float
        Multiplier on the phase variance ``1 / (2 <n>)``.  Use 4 to reproduce
        the ``sigma**2 = 2/<n>`` convention, 0 for a noiseless channel.
    """

    mean_photon_number: float
    num_bases: int
    noise_variance_scale: float = 1.0

    def __post_init__(self):
        if not self.mean_photon_number > 0:
            raise ValueError(f"mean_photon_number must be > 0, got {self.mean_photon_number}")
        M = self.num_bases
        if int(M) != M or M < 2 or (int(M) & (int(M) - 1)) != 0:
            raise ValueError(f"num_bases must be a power of two >= 2, got {M}")
        object.__setattr__(self, "num_bases", int(M))
        if self.noise_variance_scale < 0:
            raise ValueError("noise_variance_scale must be non-negative")

    @property
    def bits_per_basis(self) -> int:
        return self.num_bases.bit_length() - 1

    @property
    def basis_spacing(self) -> float:
        return math.pi / self.num_bases

    @classmethod
    def from_bits(cls, mean_photon_number: float, bits_per_basis: int, **kw) -> ChannelParams:
        return cls(mean_photon_number, 2 ** bits_per_basis, **kw)


@dataclass(frozen=True)
class BasisGrid:
    """Photon number and basis count for analyses that only need these two numbers.

    Unlike :class:`ChannelParams`, ``num_bases`` need not be a
    power of two; any object with these two attributes is accepted.
    """

    mean_photon_number: float
    num_bases: int

    def __post_init__(self):
        if not self.mean_photon_number > 0:
            raise ValueError("mean_photon_number must be > 0")
        if self.num_bases < 1:
            raise ValueError("num_bases must be >= 1")


@dataclass(frozen=True)
class DetectorCounts:
    n_e: float
    n_f: float
    delta_i: float


def wrap_phase(phi):
    """Reduce angle(s) to ``[0, 2*pi)``."""
    out = np.mod(phi, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def circular_distance(a, b):
    """Shortest angular separation between two phases, in ``[0, pi]``."""
    a, b = np.asarray(a), np.asarray(b)
    # both directions, so the result is exactly symmetric in (a, b)
    d = np.minimum(np.mod(a - b, TWO_PI), np.mod(b - a, TWO_PI))
    return float(d) if np.ndim(d) == 0 else d


def overlap_magnitude_sq(phi, phi_prime, params: ChannelParams):
    """Squared modulus of the overlap between two phase-modulated states.

    ``exp(-2 <n> [1 - cos(dphi/2)])`` with ``dphi`` the circular separation,
    so the result is 1 only for equal phases and falls monotonically out to
    ``dphi = pi``.  For small separations this is ``exp(-<n> dphi**2 / 4)``.
    """
    dphi = circular_distance(phi, phi_prime)
    # 1 - cos(x/2) = 2 sin^2(x/4), accurate for tiny separations
    out = np.exp(-4.0 * params.mean_photon_number * np.sin(dphi / 4.0) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def sigma_phi(params: ChannelParams) -> float:
    """Phase standard deviation ``1/sqrt(2 <n>)``, times the variance-scale override."""
    return math.sqrt(params.noise_variance_scale / (2.0 * params.mean_photon_number))


def sample_measured_phase(true_phase, params: ChannelParams, rng: EntropySource):
    """Add wrapped Gaussian phase noise to ``true_phase`` (scalar or array).

    One independent draw per element.
    """
    true_phase = np.asarray(true_phase, dtype=float)
    sigma = sigma_phi(params)
    if sigma == 0.0:
        return wrap_phase(true_phase)
    eps = rng.standard_normal(true_phase.size).reshape(true_phase.shape)
    return wrap_phase(true_phase + sigma * eps)


def detector_counts(input_phase, interferometer_delta, amplitude_sq: float,
                    gain: float = 1.0, efficiency: float = 1.0) -> DetectorCounts:
    """Mean photon streams at the two detectors of the bit extractor.

    ``delta_i = n_f - n_e`` scaled by ``gain * efficiency``; at
    ``interferometer_delta = pi/2`` bit 0 (phase 0) gives a positive and bit 1
    (phase pi) a negative difference current.
    """
    if not amplitude_sq > 0:
        raise ValueError("amplitude_sq must be > 0")
    phi = np.asarray(input_phase, dtype=float)
    delta = np.asarray(interferometer_delta, dtype=float)
    r3 = math.sqrt(3.0)
    mix = r3 * np.sin(phi) * np.cos(delta / 2.0) ** 2 + r3 * np.cos(phi) * np.sin(delta)
    n_e = -0.25 * amplitude_sq * (mix - 2.0)
    n_f = 0.25 * amplitude_sq * (mix + 2.0)
    scale = gain * efficiency
    if np.ndim(n_e) == 0:
        n_e, n_f = float(n_e), float(n_f)
    return DetectorCounts(n_e * scale, n_f * scale, (n_f - n_e) * scale)
