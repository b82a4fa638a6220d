"""Random bit sources standing in for the physical random bit generator.

Two flavours are provided: a seeded, reproducible source used by tests and
experiments, and one drawing from operating-system entropy for demos.  Both
hand out bits as ``uint8`` arrays of zeros and ones and Gaussian deviates as
``float64`` arrays.
"""

from __future__ import annotations

import secrets

import numpy as np


class EntropySource:
    """Abstract source of uniform bits and standard normal deviates.

    Subclasses implement :meth:`random_bits` and :meth:`standard_normal`.
    A single instance must not be shared between threads.
    """

    kind = "abstract"

    def random_bits(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def standard_normal(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def random_integers(self, n: int, bits: int) -> np.ndarray:
        """Uniform integers in ``[0, 2**bits)``, assembled from raw bits (MSB first)."""
        if bits == 0:
            return np.zeros(n, dtype=np.int64)
        raw = self.random_bits(n * bits).reshape(n, bits).astype(np.int64)
        weights = 1 << np.arange(bits - 1, -1, -1, dtype=np.int64)
        return raw @ weights


class SeededEntropy(EntropySource):
    """Deterministic source: identical seeds give identical streams."""

    kind = "seeded-deterministic"

    def __init__(self, seed: int | None = 0):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def random_bits(self, n: int) -> np.ndarray:
        return self._rng.integers(0, 2, size=n, dtype=np.uint8)

    def standard_normal(self, n: int) -> np.ndarray:
        return self._rng.standard_normal(n)

    def spawn(self, count: int) -> list[SeededEntropy]:
        """Independent child sources, e.g. one per worker or per role."""
        children = np.random.SeedSequence(self.seed).spawn(count)
        out = []
        for child in children:
            src = SeededEntropy.__new__(SeededEntropy)
            src.seed = None
            src._rng = np.random.default_rng(child)
            out.append(src)
        return out


class SystemEntropy(EntropySource):
    """Bits from :mod:`secrets`; normals from a generator seeded by the OS."""

    kind = "system-entropy"

    def __init__(self):
        self._rng = np.random.default_rng()

    def random_bits(self, n: int) -> np.ndarray:
        raw = np.frombuffer(secrets.token_bytes((n + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:n].copy()

    def standard_normal(self, n: int) -> np.ndarray:
        return self._rng.standard_normal(n)


def monobit_zscore(bits: np.ndarray) -> float:
    """Frequency-test statistic: ones count in units of its binomial std."""
    bits = np.asarray(bits)
    n = bits.size
    if n == 0:
        return 0.0
    return float((bits.sum() - n / 2) / np.sqrt(n / 4))
