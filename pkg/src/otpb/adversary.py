"""What an eavesdropper without basis knowledge can learn.

Eve sees one noisy phase sample per transmitted bit.  Over a uniform prior on
bit and basis, the density of her sample given bit ``b`` is a mixture of
``M`` wrapped Gaussians centred on that bit's constellation points.  Her best
single-sample guess picks the larger of the two mixture densities, and her
error probability is::

    P_e = 1/2 * integral_0^{2pi} min(f0, f1) dtheta

which is evaluated here by adaptive quadrature, with a Monte-Carlo estimator
of the same decision rule as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .entropy import EntropySource
from .noise import ChannelParams, sample_measured_phase, sigma_phi
from .wheel import constellation, encode

QUAD_TOL = 1e-6
LN2 = math.log(2.0)

# Gaussian tails beyond this many sigma (direct sum) or Fourier modes with
# weight below ~1e-17 (series) are dropped.
_TAIL_SIGMAS = 10.0
_FOURIER_CUTOFF = math.sqrt(2.0 * math.log(1e17))
_CHUNK = 1 << 22


class NumericalFailure(RuntimeError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


class BitDensities:
    """Densities of the measured phase conditioned on the transmitted bit.

    Chooses between a truncated image sum (narrow noise) and a Fourier
    series (wide noise), whichever needs fewer terms per evaluation point.
    """

    def __init__(self, params: ChannelParams):
        self.params = params
        self.M = params.num_bases
        self.h = params.basis_spacing
        self.sigma = sigma_phi(params)
        if self.sigma == 0.0:
            raise ValueError("densities are singular for a noiseless channel")
        _, bits, _ = constellation(params)
        self._bits = bits
        self._half_window = int(math.ceil(_TAIL_SIGMAS * self.sigma / self.h)) + 1
        self._n_modes = int(math.ceil(_FOURIER_CUTOFF / self.sigma))
        self.method = "direct" if 2 * self._half_window + 1 <= 2 * self._n_modes else "fourier"
        if self.method == "fourier":
            phases, _, _ = constellation(params)
            w = np.arange(1, self._n_modes + 1)
            damp = np.exp(-0.5 * (w * self.sigma) ** 2)
            coeffs = []
            for b in (0, 1):
                c = phases[bits == b]
                # F_b(w) = sum_k exp(-i w c_k), scaled by the Gaussian damping
                coeffs.append(damp * np.exp(-1j * np.outer(w, c)).sum(axis=1) / self.M)
            self._modes = w
            self._coeffs = np.array(coeffs)

    def __call__(self, theta) -> tuple[np.ndarray, np.ndarray]:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.method == "direct":
            return self._direct(theta)
        return self._fourier(theta)

    def _direct(self, theta):
        K = self._half_window
        off = np.arange(-K, K + 1)
        f0 = np.empty_like(theta)
        f1 = np.empty_like(theta)
        step = max(1, _CHUNK // off.size)
        norm = 1.0 / (math.sqrt(2.0 * math.pi) * self.sigma * self.M)
        for s in range(0, theta.size, step):
            t = theta[s:s + step]
            j = np.rint(t / self.h).astype(np.int64)[:, None] + off
            g = np.exp(-0.5 * ((t[:, None] - j * self.h) / self.sigma) ** 2)
            is_one = self._bits[j % (2 * self.M)].astype(bool)
            f1[s:s + step] = np.where(is_one, g, 0.0).sum(axis=1) * norm
            f0[s:s + step] = np.where(is_one, 0.0, g).sum(axis=1) * norm
        return f0, f1

    def _fourier(self, theta):
        out = []
        step = max(1, _CHUNK // self._modes.size)
        for b in (0, 1):
            f = np.empty_like(theta)
            for s in range(0, theta.size, step):
                t = theta[s:s + step]
                e = np.exp(1j * np.outer(t, self._modes))
                f[s:s + step] = (1.0 + 2.0 * (e @ self._coeffs[b]).real) / (2.0 * math.pi)
            out.append(f)
        return out[0], out[1]

    def decide(self, theta) -> np.ndarray:
        """Bayes guess of the bit from a measured phase; ties go to 0."""
        f0, f1 = self(theta)
        return (f1 > f0).astype(np.uint8)


def bayes_error_prob(params: ChannelParams, tol: float = QUAD_TOL) -> float:
    """Eve's minimum bit-error probability from one phase sample.

    The integrand ``min(f0, f1)`` has period pi, so the integral over one
    period is folded into a single sweep of width ``pi/M``: the M windows
    between constellation midpoints are evaluated together at each offset.
    """
    if sigma_phi(params) == 0.0:
        return 0.0
    dens = BitDensities(params)
    M, h = dens.M, dens.h
    starts = (np.arange(M) - 0.5) * h

    def folded(u):
        f0, f1 = dens(starts + u)
        return float(np.minimum(f0, f1).sum())

    value, abserr, info = _quad(folded, 0.0, h, tol)
    return min(max(value, 0.0), 0.5)


def _quad(func, a, b, tol):
    out = integrate.quad(func, a, b, epsabs=tol * 1e-4, epsrel=1e-12,
                         limit=500, full_output=1)
    value, abserr = out[0], out[1]
    if abserr > tol:
        raise NumericalFailure("quadrature for Eve's error probability did not converge", abserr)
    return value, abserr, out[2]


def monte_carlo_error_prob(params: ChannelParams, trials: int,
                           rng: EntropySource, batch: int = 200_000) -> tuple[float, float]:
    """Empirical error rate of the Bayes decision on simulated transmissions.

    Returns ``(estimate, std_error)`` with the binomial standard error of the
    estimate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dens = BitDensities(params) if sigma_phi(params) > 0 else None
    m = params.bits_per_basis
    errors = 0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        bits = rng.random_bits(n)
        bases = rng.random_integers(n, m)
        measured = sample_measured_phase(encode(bits, bases, params), params, rng)
        if dens is None:
            guess = _nearest_point_bit(measured, params)
        else:
            guess = dens.decide(measured)
        errors += int(np.count_nonzero(guess != bits))
        done += n
    p = errors / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def _nearest_point_bit(measured, params):
    phases, bits, _ = constellation(params)
    idx = np.rint(np.asarray(measured) / params.basis_spacing).astype(np.int64)
    return bits[idx % phases.size].astype(np.uint8)


def leak_per_bit(params: ChannelParams, tol: float = QUAD_TOL) -> float:
    """Eve's statistical gain per bit, ``t_bit = 1/2 - P_e``."""
    return 0.5 - bayes_error_prob(params, tol)


def renyi_entropy_per_bit(p_e: float) -> float:
    """Conditional collision entropy ``-log2((1 - P_e)**2)``.

    Reaches 2 at ``P_e = 1/2``; an ``n``-bit stream has ``n`` times this.
    """
    if not 0.0 <= p_e <= 0.5:
        raise ValueError(f"p_e must lie in [0, 0.5], got {p_e}")
    # log1p keeps tiny error probabilities; 0.0 - ... avoids -0.0 at p_e = 0
    return 0.0 - 2.0 * math.log1p(-p_e) / LN2


@dataclass(frozen=True)
class EveStatistics:
    p_e: float
    t_bit: float
    renyi_per_bit: float
    params: ChannelParams


def eve_statistics(params: ChannelParams) -> EveStatistics:
    p_e = bayes_error_prob(params)
    return EveStatistics(p_e, 0.5 - p_e, renyi_entropy_per_bit(p_e), params)


# --- basis-level mutual information -------------------------------------

def basis_distance(k, k_e, M: int):
    """Circular distance between basis indices (bases repeat every ``M``)."""
    d = np.mod(np.asarray(k) - np.asarray(k_e), M)
    return np.minimum(d, M - d)


def conditional_exponent(k, k_e, params: ChannelParams):
    """``<n> [1 - cos(pi d / M)]``, the negated log of the unnormalised kernel."""
    d = basis_distance(k, k_e, params.num_bases)
    return 2.0 * params.mean_photon_number * np.sin(0.5 * math.pi * d / params.num_bases) ** 2


def kernel_log_normaliser(params: ChannelParams) -> float:
    """Natural log of the double sum of the kernel over all ``(k, k_E)``.

    The kernel depends only on circular distance, so the double sum is ``M``
    times one row.
    """
    M = params.num_bases
    x = conditional_exponent(0, np.arange(M), params)
    return math.log(M) + float(np.log(np.exp(-x).sum()))


@dataclass(frozen=True)
class MutualInfoTable:
    """Per-``k_E`` information Eve gains about basis ``k``.

    ``entropy`` is the normaliser ``H(k)``; ``mutual_info = H - p log2(1/p)``
    with ``p`` the normalised conditional probability, and ``ratio`` is
    ``mutual_info / H`` clamped to [0, 1].
    """

    k: int
    k_e: np.ndarray
    p_unnorm: np.ndarray
    p_norm: np.ndarray
    mutual_info: np.ndarray
    ratio: np.ndarray
    entropy: float
    convention: str


def mutual_information_table(k: int, params: ChannelParams,
                             entropy: str = "uniform") -> MutualInfoTable:
    """Mutual-information table for legitimate basis ``k`` against every ``k_E``.

    ``entropy="uniform"`` uses ``H(k) = log2 M``; ``entropy="per-symbol"``
    uses ``(1/M) log2 M``.  With the per-symbol normaliser the dip around
    ``k`` is deeper and wider.
    """
    M = params.num_bases
    if not 0 <= k < M:
        raise ValueError(f"k={k} out of range for M={M}")
    if entropy == "uniform":
        H = math.log2(M)
    elif entropy == "per-symbol":
        H = math.log2(M) / M
    else:
        raise ValueError(f"unknown entropy convention {entropy!r}")
    k_e = np.arange(M)
    x = conditional_exponent(k, k_e, params)
    log_z = kernel_log_normaliser(params)
    p_unnorm = np.exp(-x)
    log_p = -x - log_z
    p_norm = np.exp(log_p)
    # p log2(1/p), written as p * (x + ln Z) / ln 2 so that tiny p stay exact
    surprisal = p_norm * (x + log_z) / LN2
    mi = H - surprisal
    ratio = np.clip(mi / H, 0.0, 1.0)
    return MutualInfoTable(k, k_e, p_unnorm, p_norm, mi, ratio, H, entropy)
