import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certmark.certify import (
    BitCertificate,
    CertifiedInterval,
    LabelProbBounds,
    certified_radius_bit,
    certify_batch,
    certify_multiclass,
    certify_multilabel,
    certify_regression,
    estimate_bit_certificates,
    regression_indices,
    solve_e_lower,
    solve_e_upper,
)
from certmark.core import Watermark
from certmark.smoothing import NoisyDecodeBatch, SmoothingMethod
from certmark.stats import clopper_pearson_lower

probs = st.floats(0.0, 1.0)


def batch_from(bit_counts, label_counts, ba, N):
    return NoisyDecodeBatch("b", N, 0.1, np.asarray(bit_counts), np.asarray(label_counts),
                            np.sort(np.asarray(ba, dtype=float))[::-1], k_prime=1)


class TestRadius:
    @pytest.mark.parametrize("p", [0.5, 0.3, 0.0])
    def test_uncertified(self, p):
        assert certified_radius_bit(p, 0.1) == 0.0

    def test_value(self):
        assert certified_radius_bit(0.975, 0.1) == pytest.approx(0.19600, abs=1e-5)


class TestMulticlass:
    def cert(self, radius, value=1):
        return BitCertificate(0.9, radius, value)

    def test_fully_certified(self):
        wt = Watermark("1011")
        iv = certify_multiclass(wt, [self.cert(1.0)] * 4, wt, 0.5)
        assert (iv.ba_lower, iv.ba_upper) == (1.0, 1.0)

    def test_vacuous(self):
        wt = Watermark("1011")
        iv = certify_multiclass(wt, [self.cert(0.1)] * 4, wt, 0.5)
        assert (iv.ba_lower, iv.ba_upper) == (0.0, 1.0)

    def test_mixed(self):
        wt = Watermark("1011")
        iv = certify_multiclass(Watermark("1010"), [self.cert(1.0)] * 4, wt, 0.5)
        assert (iv.ba_lower, iv.ba_upper) == (0.75, 0.75)

    def test_estimates(self):
        m, alpha = 4, 0.001
        b = batch_from([100, 0, 50, 100], [0] * 4, [1.0] * 100, 100)
        certs = estimate_bit_certificates(b, Watermark("1001"), alpha, 0.1)
        assert certs[0].p_lower == pytest.approx((alpha / m) ** (1 / 100), rel=1e-9)
        assert certs[1].p_lower == pytest.approx((alpha / m) ** (1 / 100), rel=1e-9)
        assert certs[2].radius == 0.0

    def test_joint_coverage(self):
        rng = np.random.default_rng(1)
        m, N, alpha, trials = 8, 200, 0.05, 2000
        p = rng.uniform(0.55, 0.99, size=m)
        fails = 0
        for _ in range(trials):
            k = rng.binomial(N, p)
            lo = np.array([clopper_pearson_lower(int(c), N, alpha / m) for c in k])
            fails += np.any(lo > p)
        assert fails / trials <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / trials)


class TestMultilabel:
    def test_worked_example(self):
        b = LabelProbBounds([0.9, 0.8], [0.2, 0.1])
        assert solve_e_lower(b, 2, 2, 0.0, 0.1) == 2

    def test_unsatisfiable(self):
        b = LabelProbBounds([0.1, 0.05], [0.3, 0.2, 0.2])
        for R in (0.0, 0.1, 1.0):
            assert solve_e_lower(b, 2, 2, R, 0.1) == 0

    @settings(max_examples=40, deadline=None)
    @given(st.lists(probs, min_size=1, max_size=6), st.lists(probs, min_size=1, max_size=6), st.data())
    def test_monotone_in_radius(self, ones, zeros, data):
        b = LabelProbBounds(ones, zeros, zeros, ones)
        k = data.draw(st.integers(1, len(ones) + len(zeros)))
        grid = [0.0, 0.02, 0.05, 0.1, 0.2, 0.5]
        lows = [solve_e_lower(b, k, k, R, 0.1) for R in grid]
        ups = [solve_e_upper(b, k, k, R, 0.1) for R in grid]
        assert lows == sorted(lows, reverse=True)
        assert ups == sorted(ups, reverse=True)

    def test_mirror(self):
        b = LabelProbBounds([0.9, 0.7], [0.3, 0.1, 0.05], [0.6, 0.4, 0.3], [0.95, 0.8])
        for R in (0.0, 0.05):
            assert solve_e_upper(b, 2, 2, R, 0.1) == solve_e_lower(b.swapped(), 2, 2, R, 0.1)

    def test_separation_favouring_zeros(self):
        # m=5, d=2: labels outside L are near-certain members, those in L never are
        b = LabelProbBounds([0.0, 0.0], [1.0, 1.0, 1.0], [0.999, 0.999, 0.999], [0.001, 0.001])
        for k in (1, 2, 3):
            assert solve_e_upper(b, k, k, 0.0, 0.1) == min(3, k)

    def test_interval_formula(self):
        wt = Watermark([1] * 15 + [0] * 15)
        assert certify_multilabel(12, 0, wt, 15).ba_lower == pytest.approx(0.8)
        assert certify_multilabel(15, 0, wt, 15).ba_lower == 1.0
        wt4 = Watermark("1100")
        iv = certify_multilabel(0, 0, wt4, 2)
        assert (iv.ba_lower, iv.ba_upper) == (0.0, 1.0)
        wt10 = Watermark("1100000000")
        iv = certify_multilabel(0, 0, wt10, 2)
        assert (iv.ba_lower, iv.ba_upper) == (pytest.approx(1 - 4 / 10), 1.0)


class TestRegression:
    def test_constant_samples(self):
        b = batch_from([0], [0], [1.0] * 500, 500)
        iv = certify_regression(b, 0.01, 0.1, 0.05)
        assert iv.ba_lower == 1.0 and iv.ba_upper == 1.0

    def test_abstain(self):
        b = batch_from([0], [0], [0.9, 0.8, 0.7], 3)
        iv = certify_regression(b, 0.05, 0.1, 0.0)
        assert (iv.ba_lower, iv.ba_upper) == (0.0, 1.0)

    def test_ranks_bracket_quantiles(self):
        N, alpha = 2000, 0.01
        for ratio in (0.0, 0.5, 1.0, 2.0):
            l, h = regression_indices(N, alpha, ratio * 0.1, 0.1)
            q = 0.5 * math.erfc(ratio / math.sqrt(2))
            assert l / N < q < h / N


class TestIntervals:
    def test_validation(self):
        with pytest.raises(ValueError):
            CertifiedInterval(0.8, 0.7, 0.1, 0.99, SmoothingMethod.REGRESSION)
        with pytest.raises(ValueError):
            CertifiedInterval(0.1, 0.7, -1, 0.99, SmoothingMethod.REGRESSION)
        assert CertifiedInterval(0.2, 0.7, 0.1, 0.99, "regression").contains(0.7)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from(list(SmoothingMethod)))
    def test_nesting_along_radius(self, seed, method):
        rng = np.random.default_rng(seed)
        m, N = 8, 400
        wt = Watermark.random(m, rng)
        p = rng.uniform(0, 1, size=m)
        b = batch_from(rng.binomial(N, p), rng.binomial(N, p), rng.integers(0, m + 1, N) / m, N)
        grid = [0.0, 0.05, 0.1, 0.2, 0.4]
        ivs = certify_batch(b, wt, method, 0.01, 0.1, grid, k=max(1, wt.ones()), k_prime=max(1, wt.ones()))
        for a, c in zip(ivs, ivs[1:]):
            assert c.ba_lower <= a.ba_lower + 1e-12 and c.ba_upper >= a.ba_upper - 1e-12
