import numpy as np

from otpb.entropy import SeededEntropy, SystemEntropy, monobit_zscore


def test_seeded_determinism():
    a, b = SeededEntropy(5), SeededEntropy(5)
    assert np.array_equal(a.random_bits(1000), b.random_bits(1000))
    assert np.array_equal(a.standard_normal(10), b.standard_normal(10))


def test_spawn_independent_and_reproducible():
    x = [s.random_bits(256) for s in SeededEntropy(9).spawn(3)]
    y = [s.random_bits(256) for s in SeededEntropy(9).spawn(3)]
    for u, v in zip(x, y):
        assert np.array_equal(u, v)
    assert not np.array_equal(x[0], x[1])


def test_random_integers_range():
    v = SeededEntropy(1).random_integers(10000, 5)
    assert v.min() >= 0 and v.max() < 32
    assert len(set(v.tolist())) == 32
    assert SeededEntropy(1).random_integers(3, 0).tolist() == [0, 0, 0]


def test_system_entropy_bits():
    bits = SystemEntropy().random_bits(100_003)
    assert bits.size == 100_003 and set(np.unique(bits)) <= {0, 1}
    assert abs(monobit_zscore(bits)) < 6
    assert SystemEntropy().standard_normal(5).shape == (5,)


def test_monobit():
    assert monobit_zscore(np.array([])) == 0.0
    assert monobit_zscore(np.ones(100)) == 10.0
