import numpy as np
import pytest
from scipy import stats

from mtpp.rng import GOLDEN, Stream, mix64, split


def test_scalar_matches_vector_draws():
    s1 = Stream(12345)
    scalars = np.array([s1.uniform() for _ in range(5000)])
    s2 = Stream(12345)
    block = s2.uniforms(5000)
    np.testing.assert_array_equal(scalars, block)


def test_counter_indexing_is_stable_across_batching():
    a = Stream(99)
    a.uniforms(3)
    tail_a = [a.uniform() for _ in range(4)]
    b = Stream(99)
    [b.uniform() for _ in range(3)]
    tail_b = list(b.uniforms(4))
    assert tail_a == tail_b


def test_values_in_unit_interval_and_uniform():
    u = Stream(2024).uniforms(20_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_exponential_law():
    s = Stream(7)
    x = s.exponentials(2.0, 20_000)
    assert stats.kstest(x, "expon", args=(0, 0.5)).pvalue > 0.01


def test_split_produces_decorrelated_streams():
    parent = Stream(5)
    kids = [parent.spawn(j).uniforms(2000) for j in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            r = np.corrcoef(kids[i], kids[j])[0, 1]
            assert abs(r) < 0.05
    # and none equals the parent's own draws
    assert not np.array_equal(kids[0], parent.uniforms(2000))


def test_split_is_deterministic_and_path_sensitive():
    assert split(42, 1, 2, 3) == split(42, 1, 2, 3)
    assert split(42, 1, 2, 3) != split(42, 1, 3, 2)
    assert split(42, 0) != split(42, 1)
    with pytest.raises(ValueError):
        split(42, -1)


def test_mix64_reference_values():
    # SplitMix64 with seed 0: first outputs of mix64(i * GOLDEN), a fixed
    # cross-implementation anchor for the documented algorithm.
    outs = [mix64((i * GOLDEN) & (2**64 - 1)) for i in range(1, 4)]
    assert outs == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_categorical_frequencies():
    s = Stream(11)
    draws = s.categorical((0.2, 0.5, 0.3), 50_000)
    freq = np.bincount(draws, minlength=3) / 50_000
    np.testing.assert_allclose(freq, [0.2, 0.5, 0.3], atol=0.01)
