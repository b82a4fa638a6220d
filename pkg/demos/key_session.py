"""
A key-distribution session over a socket
========================================

Alice and Bob start from a shared seed of basis bits, then run rounds of the
bit-pool protocol.  Bob runs in a worker thread; the two talk through framed
messages over a connected socket pair.
"""

import numpy as np

from otpb import SessionConfig, make_stream_pair, run_session

config = SessionConfig(n_mean=100, M=256, s=64, lam=8, rounds=100, seed=1)
d = config.dims()
print(f"per round: {d.s} fresh bits, leak charge {d.t_bits}, margin {d.lam} -> {d.key_bits} key bits")

link = make_stream_pair()
try:
    result = run_session(config, link)
finally:
    link.close()

print(result.audit.summary())
key = result.alice.pool.key_region
print(f"key bits: {key.size}, ones fraction {key.mean():.4f}")
print("first 64 bits:", "".join(map(str, key[:64])))
assert np.array_equal(key, result.bob.pool.key_region)

# Each round leaves a ledger entry with digests of the new bases and key block
for rec in result.alice.ledger[:3]:
    print(f"round {rec.run_index}: {rec.key_bits} key bits, bases {rec.bases_digest}, key {rec.key_digest}")
