"""
How often does the eavesdropper guess wrong?
============================================

Without the basis, Eve sees a mixture of all bases for each bit value.  Her
best single-sample error probability P_e approaches 1/2 as the number of
bases M grows, and her leak t_bit = 1/2 - P_e drops roughly like 1/(2M).
"""

import math

from otpb import ChannelParams, SeededEntropy, bayes_error_prob, monte_carlo_error_prob, renyi_entropy_per_bit

n_mean = 1000
print(f"<n> = {n_mean}")
print(f"{'M':>6} {'P_e':>12} {'log10 t_bit':>12} {'1/(2M)':>10} {'Renyi/bit':>10}")
for m in range(3, 13):
    M = 2 ** m
    pe = bayes_error_prob(ChannelParams(n_mean, M))
    print(f"{M:6d} {pe:12.8f} {math.log10(0.5 - pe):12.4f} {1 / (2 * M):10.2e} {renyi_entropy_per_bit(pe):10.5f}")

# The quadrature is cross-checked by simulating the same decision rule
p = ChannelParams(n_mean, 64)
est, se = monte_carlo_error_prob(p, 200_000, SeededEntropy(1))
print(f"\nM=64: quadrature {bayes_error_prob(p):.5f}, Monte Carlo {est:.5f} +- {se:.5f}")
