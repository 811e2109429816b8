"""Splittable RNG streams: determinism, golden value, distributional checks."""
import itertools
import math

import numpy as np
import pytest
from scipy import stats

from gwcheck.rng import RESAMPLE_STREAM_ID, RngStream, as_generator, substream

# frozen regression value: first uniform of stream (12345, 7) under the
# chosen PRNG construction; any change here breaks reproducibility
GOLDEN_UNIFORM_12345_7 = 0.9830252332964733


def test_golden_first_uniform():
    s = RngStream(12345, 7)
    assert s.uniform01() == GOLDEN_UNIFORM_12345_7


def test_determinism_same_stream():
    a = RngStream(99, 3)
    b = RngStream(99, 3)
    assert [a.uniform01() for _ in range(1000)] == [b.uniform01() for _ in range(1000)]


def test_distinct_streams_differ():
    a = RngStream(99, 0)
    b = RngStream(99, 1)
    assert [a.uniform01() for _ in range(10)] != [b.uniform01() for _ in range(10)]


def test_substream_equals_constructor():
    a = substream(7, 42)
    b = RngStream(7, 42)
    assert [a.uniform01() for _ in range(50)] == [b.uniform01() for _ in range(50)]


def test_resample_stream_id_reserved():
    assert RESAMPLE_STREAM_ID == 0


def test_as_generator():
    s = RngStream(1, 2)
    gen = as_generator(s)
    assert isinstance(gen, np.random.Generator)
    g2 = as_generator(gen)
    assert g2 is gen


def test_gamma_shape_rate_mean():
    s = RngStream(2024, 1)
    n = 10**6
    x = np.array([s.gamma(5.0, 0.5) for _ in range(n // 100)])
    # keep the loop-based API covered but do the bulk draw via the generator
    y = s.generator.gamma(shape=5.0, scale=2.0, size=n)
    assert abs(float(np.mean(y)) - 10.0) < 0.05
    assert np.all(x > 0)
    assert abs(float(np.mean(x)) - 10.0) < 10 * math.sqrt(20.0 / x.size)


def test_gamma_small_shape():
    s = RngStream(2024, 2)
    x = np.array([s.gamma(0.35, 1.0) for _ in range(200_000)])
    assert np.all(x >= 0)
    assert abs(float(np.mean(x)) - 0.35) < 0.01


def test_gamma_rejects_bad_params():
    s = RngStream(0, 1)
    with pytest.raises(ValueError):
        s.gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        s.gamma(1.0, -1.0)


def test_normal_degenerate_sd_zero():
    s = RngStream(0, 1)
    assert s.normal(3.5, 0.0) == 3.5
    with pytest.raises(ValueError):
        s.normal(0.0, -1.0)


def test_normal_moments():
    s = RngStream(55, 1)
    x = np.array([s.normal(2.0, 3.0) for _ in range(100_000)])
    assert abs(float(np.mean(x)) - 2.0) < 0.05
    assert abs(float(np.std(x)) - 3.0) < 0.05


def test_bernoulli_half():
    s = RngStream(8, 1)
    draws = [s.bernoulli() for _ in range(50_000)]
    assert set(draws) <= {0, 1}
    assert abs(sum(draws) / len(draws) - 0.5) < 0.01


def test_uniform_int_range_and_uniformity():
    s = RngStream(4, 1)
    k = 7
    n = 70_000
    draws = np.array([s.uniform_int(k) for _ in range(n)])
    assert draws.min() >= 1 and draws.max() <= k
    counts = np.bincount(draws, minlength=k + 1)[1:]
    chi2 = float(np.sum((counts - n / k) ** 2 / (n / k)))
    assert stats.chi2.sf(chi2, k - 1) > 0.001


def test_random_permutation_uniform_k3():
    s = RngStream(31, 1)
    n = 10**6
    counts = {}
    for _ in range(n):
        perm = tuple(s.random_permutation(3))
        counts[perm] = counts.get(perm, 0) + 1
    assert set(counts) == set(itertools.permutations((1, 2, 3)))
    expected = n / 6
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert stats.chi2.sf(chi2, 5) > 0.001


def test_random_permutation_is_permutation():
    s = RngStream(6, 2)
    for k in (1, 2, 5, 11):
        perm = s.random_permutation(k)
        assert sorted(perm) == list(range(1, k + 1))


def test_stream_attrs():
    s = RngStream(12, 34)
    assert s.master_seed == 12 and s.stream_id == 34
