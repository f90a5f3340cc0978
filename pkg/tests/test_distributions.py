import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biposlm.distributions import (CondDistribution, DistributionError, FreqTable, count, entropy,
                                   interpolate, mle, relative_entropy, smooth_additive)


def _vec(min_size=2, max_size=8):
    return st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=min_size, max_size=max_size).filter(
        lambda xs: sum(xs) > 1e-3).map(lambda xs: np.array(xs) / sum(xs))


class TestCount:
    def test_coin(self):
        t = count([("c", "heads"), ("c", "heads"), ("c", "tails")])
        assert t.get("c", "heads") == 2 and t.get("c", "tails") == 1
        assert t.total("c") == 3 and t.n == 3

    def test_empty(self):
        t = count([])
        assert t.n == 0 and t.contexts() == []

    def test_two_passes_double(self):
        data = [("x", 1), ("y", 2), ("x", 1), ("x", 3)]
        once = count(data)
        twice = count(data + data)
        for c in once.contexts():
            for e in once.counts[c]:
                assert twice.get(c, e) == 2 * once.get(c, e)

    def test_shard_merge(self):
        data = [("x", i % 3) for i in range(20)] + [("y", i % 2) for i in range(7)]
        assert count(data[:9]) + count(data[9:]) == count(data)


class TestMle:
    def test_three_to_one(self):
        d = mle(count([("c", "h")] * 3 + [("c", "t")]))
        assert d.as_dict("c") == {"h": 0.75, "t": 0.25}

    def test_degenerate(self):
        d = mle(count([("c", "h")] * 4), events=["h", "t", "e"])
        np.testing.assert_array_equal(d.row("c"), [1.0, 0.0, 0.0])

    def test_heads_over_tosses(self):
        H, N = 37, 100
        d = mle(count([("coin", "H")] * H + [("coin", "T")] * (N - H)))
        assert d.p("H", "coin") == H / N

    def test_zero_total_context(self):
        t = FreqTable()
        t.counts["empty"]  # materializes an empty row
        with pytest.raises(DistributionError):
            mle(t)


class TestSmoothing:
    def test_uniform_fixed_point(self):
        d = CondDistribution(range(4), {"c": np.full(4, 0.25)})
        np.testing.assert_allclose(smooth_additive(d, 0.1).row("c"), 0.25, rtol=0, atol=1e-15)

    def test_zero_becomes_v1(self):
        d = CondDistribution(("a", "b"), {"c": np.array([1.0, 0.0])})
        assert smooth_additive(d, 1e-4).p("b", "c") == 1e-4

    def test_random_five(self):
        rng = np.random.default_rng(3)
        p = rng.random(5)
        d = CondDistribution(range(5), {"c": p / p.sum()})
        s = smooth_additive(d, 0.01).row("c")
        # direct summation oracle
        assert abs(math.fsum(s.tolist()) - 1.0) < 1e-12

    def test_v1_too_large(self):
        d = CondDistribution(range(4), {"c": np.full(4, 0.25)})
        with pytest.raises(DistributionError):
            smooth_additive(d, 0.25)


class TestInterpolate:
    def test_lambda_one_table_row(self):
        # p'1 of the combination table equals the first distribution at lambda=1
        assert interpolate([0.72, 0.28], [0.27, 0.73], 1.0).tolist() == [0.72, 0.28]

    def test_lambda_zero(self):
        assert interpolate([0.72, 0.28], [0.25, 0.75], 0.0).tolist() == [0.25, 0.75]

    def test_midpoint(self):
        assert interpolate([1, 0], [0, 1], 0.5).tolist() == [0.5, 0.5]

    def test_mappings(self):
        assert interpolate({"a": 1.0, "b": 0.0}, {"b": 1.0, "a": 0.0}, 0.25) == {"a": 0.25, "b": 0.75}

    def test_mismatch(self):
        with pytest.raises(DistributionError):
            interpolate([0.5, 0.5], [1 / 3] * 3, 0.5)
        with pytest.raises(DistributionError):
            interpolate({"a": 1.0}, {"b": 1.0}, 0.5)


class TestEntropy:
    def test_coin(self):
        assert entropy([0.5, 0.5]) == 1.0

    def test_certain(self):
        assert entropy([1.0, 0.0, 0.0]) == 0.0

    @pytest.mark.parametrize("size", [1, 3, 8, 100])
    def test_uniform(self, size):
        assert entropy(np.full(size, 1 / size)) == pytest.approx(math.log2(size), abs=1e-12)

    def test_mixed(self):
        # 4 x 1/8 and 1/2: 4*(3/8) + 1/2 = 2 bits
        assert entropy([1 / 8] * 4 + [1 / 2]) == 2.0


class TestRelativeEntropy:
    def test_identity(self):
        assert relative_entropy([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_one_bit(self):
        assert relative_entropy([1.0, 0.0], [0.5, 0.5]) == 1.0

    def test_asymmetric(self):
        # frozen from a 40-digit evaluation of the defining sum
        forward = relative_entropy([0.9, 0.1], [0.5, 0.5])
        backward = relative_entropy([0.5, 0.5], [0.9, 0.1])
        assert forward == pytest.approx(0.5310044064107188, abs=1e-12)
        assert backward == pytest.approx(0.7369655941662062, abs=1e-12)
        assert forward != backward

    def test_support_violation(self):
        with pytest.raises(DistributionError):
            relative_entropy([0.5, 0.5], [1.0, 0.0])

    def test_zero_zero_convention(self):
        assert relative_entropy([1.0, 0.0], [1.0, 0.0]) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 6)), min_size=1, max_size=60))
def test_mle_of_counts_normalized(events):
    d = mle(count(events))
    for c in d.rows:
        assert abs(math.fsum(d.row(c).tolist()) - 1.0) < 1e-12


@settings(max_examples=100, deadline=None)
@given(_vec(), st.floats(1e-9, 0.99, allow_nan=False))
def test_smoothing_normalized_and_positive(p, frac):
    v1 = frac / len(p)
    s = smooth_additive(CondDistribution(range(len(p)), {"c": p}), v1).row("c")
    assert abs(math.fsum(s.tolist()) - 1.0) < 1e-12
    assert np.all(s > 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8).flatmap(lambda k: st.tuples(_vec(k, k), _vec(k, k))))
def test_relative_entropy_nonnegative(pq):
    p, q = pq
    q = 0.5 * q + 0.5 / len(q)  # keep the prior's support full
    d = relative_entropy(p, q)
    assert d >= 0
    assert relative_entropy(q, q) == 0.0
    if d < 1e-12:
        np.testing.assert_allclose(p, q, atol=1e-5)


@settings(max_examples=100, deadline=None)
@given(_vec(1, 12))
def test_entropy_bounds(p):
    h = entropy(p)
    assert -1e-12 <= h <= math.log2(len(p)) + 1e-12
