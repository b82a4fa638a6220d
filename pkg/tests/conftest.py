import numpy as np
import pytest

from otpb.entropy import EntropySource, SeededEntropy


class ZeroNoise(EntropySource):
    """Rigged source: bits from a seeded generator, Gaussian deviates all zero."""

    def __init__(self, seed=0):
        self._bits = SeededEntropy(seed)

    def random_bits(self, n):
        return self._bits.random_bits(n)

    def standard_normal(self, n):
        return np.zeros(n)


@pytest.fixture
def rng():
    return SeededEntropy(12345)


@pytest.fixture
def zero_noise():
    return ZeroNoise()
