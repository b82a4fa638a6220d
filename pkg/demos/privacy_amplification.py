"""
Toeplitz privacy amplification
==============================

A random Toeplitz matrix over GF(2) compresses the pool so that Eve's
partial knowledge is squeezed out.  Each round hashes the current bases bits
together with the fresh bits and keeps what is left after subtracting Eve's
leak and a security margin.
"""

import numpy as np

from otpb import SeededEntropy, build_toeplitz, dims_for_round, eve_bound_corollary5, hash_apply
from otpb.pa import serialize_seed

rng = SeededEntropy(3)

# A small hash, printed in full
h = build_toeplitz(4, 9, rng)
print(h.matrix())
x = rng.random_bits(9)
print("input ", x, "\noutput", hash_apply(h, x))

# The seed travels over the classical channel as a few bytes
print(f"seed: {h.rows + h.cols - 1} bits -> {len(serialize_seed(h))} bytes on the wire")

# Round sizes: s bits per round, m bits per basis, leak t, margin lambda
d = dims_for_round(s=64, m=8, t_leak=0.125, lam=8)
print(f"in={d.in_bits} out={d.out_bits} next-bases={d.bases_bits} key/round={d.key_bits}")

# Eve's expected information after hashing falls by half per extra margin bit
for lam in (0, 8, 20, 40):
    print(f"lambda={lam:2d}: Eve's information <= {eve_bound_corollary5(lam):.3e} bits")

# Large inputs are hashed through an FFT convolution; the result is unchanged
big = build_toeplitz(600, 5000, rng)
y = rng.random_bits(5000)
dense = (big.matrix().astype(np.int64) @ y.astype(np.int64)) % 2
print("FFT path agrees with dense product:", np.array_equal(hash_apply(big, y), dense))
