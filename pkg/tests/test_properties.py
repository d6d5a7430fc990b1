"""Property-based checks of the building blocks."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mboot import (
    MAX,
    MEAN,
    SHORTH,
    XICOR,
    ScalingRate,
    ci_basic,
    draw_indices,
    empirical_quantile,
    ks_distance,
    mboot,
)
from mboot.estimators import stat_max, stat_mean, stat_shorth, stat_xicor
from mboot.rng import RngStream

small = st.floats(-1e6, 1e6, allow_nan=False)
samples = st.lists(small, min_size=1, max_size=25)
probs = st.floats(0.0, 1.0)


class TestKolmogorovDistance:
    @given(samples)
    def test_identity(self, a):
        assert ks_distance(a, a) == 0.0

    @given(samples, samples)
    def test_symmetric_and_bounded(self, a, b):
        d = ks_distance(a, b)
        assert d == ks_distance(b, a)
        assert 0.0 <= d <= 1.0

    @given(samples, samples, samples)
    def test_triangle(self, a, b, c):
        assert ks_distance(a, c) <= ks_distance(a, b) + ks_distance(b, c) + 1e-12

    @given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=25), st.integers(1, 50), st.integers(-99, 99))
    def test_affine_invariance(self, a, scale, shift):
        # integer data keeps the transform exact, so ties survive it
        b = list(reversed(a))[: max(1, len(a) // 2)]
        x = np.array(a, float) * scale + shift
        y = np.array(b, float) * scale + shift
        assert ks_distance(x, y) == ks_distance(a, b)


class TestQuantile:
    @given(samples, probs, probs)
    def test_monotone_in_p(self, v, p, q):
        lo, hi = sorted((p, q))
        assert empirical_quantile(v, lo) <= empirical_quantile(v, hi)

    @given(samples, probs)
    def test_is_a_sample_value(self, v, p):
        assert empirical_quantile(v, p) in v

    @given(samples)
    def test_extremes(self, v):
        assert empirical_quantile(v, 0.0) == min(v)
        assert empirical_quantile(v, 1.0) == max(v)


class TestStatistics:
    @given(st.lists(small, min_size=3, max_size=30), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, v, rnd):
        perm = list(range(len(v)))
        rnd.shuffle(perm)
        x = np.array(v)
        idx = np.arange(len(v))
        assert stat_max(x, idx) == stat_max(x, perm)
        assert stat_shorth(x, idx) == stat_shorth(x, perm)
        assert np.isclose(stat_mean(x, idx), stat_mean(x, perm), rtol=1e-12, atol=1e-6)

    @given(st.lists(small, min_size=3, max_size=30))
    def test_shorth_within_range(self, v):
        s = stat_shorth(np.array(v), np.arange(len(v)))
        assert min(v) - 1e-9 <= s <= max(v) + 1e-9

    @given(
        st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=3, max_size=20, unique_by=lambda t: t[0]),
        st.randoms(use_true_random=False),
    )
    def test_xicor_invariances(self, pairs, rnd):
        xy = np.array(pairs, dtype=float)
        idx = np.arange(len(pairs))
        base = stat_xicor(xy, idx)
        assume(np.isfinite(base))
        # strictly increasing transforms of either coordinate leave the ranks alone
        moved = np.column_stack([np.exp(xy[:, 0] / 10.0), xy[:, 1] ** 3 + 2.0])
        assert stat_xicor(moved, idx) == base
        perm = list(idx)
        rnd.shuffle(perm)
        assert stat_xicor(xy, perm) == base


class TestResampling:
    @given(st.integers(1, 60), st.data())
    def test_draws_are_distinct_and_in_range(self, n, data):
        m = data.draw(st.integers(1, n))
        seed = data.draw(st.integers(0, 2**63))
        idx = draw_indices(n, m, False, RngStream(seed, data.draw(st.integers(0, 10**6))))
        assert len(set(idx.tolist())) == m
        assert idx.min() >= 0 and idx.max() < n

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32), st.sampled_from([MAX, MEAN, SHORTH]), st.booleans())
    def test_mboot_deterministic(self, seed, stat, replace):
        x = np.random.default_rng(seed).normal(size=80)
        a = mboot(x, stat, 12, R=50, replace=replace, seed=seed)
        b = mboot(x, stat, 12, R=50, replace=replace, seed=seed)
        assert np.array_equal(a.replicates, b.replicates)
        c = mboot(x, stat, 12, R=50, replace=replace, seed=seed + 1)
        assert not np.array_equal(a.replicates, c.replicates)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.5, 0.99))
    def test_interval_endpoints_ordered(self, seed, level):
        x = np.random.default_rng(seed).normal(size=60)
        dist = mboot(x, MEAN, 10, R=200, seed=seed)
        ci = ci_basic(dist, ScalingRate.power(0.5), level)
        assert ci.lower <= ci.upper

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32))
    def test_xicor_replicates_bounded(self, seed):
        xy = np.random.default_rng(seed).normal(size=(50, 2))
        reps = mboot(xy, XICOR, 15, R=50, seed=seed).replicates
        assert np.all(reps <= 1.0) and np.all(reps >= -1.0)
