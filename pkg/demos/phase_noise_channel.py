"""
Phase noise on a mesoscopic coherent state
==========================================

How much two phase-shifted coherent states overlap, how the noisy phase a
receiver measures is distributed, and what the two detectors of the bit
extractor see.
"""

import math

import numpy as np

from otpb import ChannelParams, SeededEntropy, detector_counts, overlap_magnitude_sq, sample_measured_phase, sigma_phi

# A channel with <n> = 1000 photons per bit and 256 bases
params = ChannelParams(1000.0, 256)
print(f"sigma_phi = {sigma_phi(params):.5f} rad, basis spacing = {params.basis_spacing:.5f} rad")

# The noise is much wider than the basis spacing, so neighbouring bases
# produce almost the same state
for shift in (params.basis_spacing, 10 * params.basis_spacing, math.pi):
    print(f"|<psi(0)|psi({shift:.4f})>|^2 = {overlap_magnitude_sq(0.0, shift, params):.4g}")

# Sample what a receiver measures when phase 0 was sent
draws = sample_measured_phase(np.zeros(100_000), params, SeededEntropy(0))
wrapped = np.angle(np.exp(1j * draws))
print(f"measured spread: {wrapped.std():.5f} (model {sigma_phi(params):.5f})")

# Detector currents at the operating point |alpha| = 10, Delta = pi/2:
# bit 0 (phase 0) and bit 1 (phase pi) give opposite difference currents
for phi in (0.0, math.pi):
    d = detector_counts(phi, math.pi / 2, 100.0)
    print(f"phi={phi:.3f}: n_e={d.n_e:.3f} n_f={d.n_f:.3f} delta_i={d.delta_i:+.3f}")
