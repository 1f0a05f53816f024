import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certmark.errors import DomainError
from certmark.stats import (
    ConfidenceLevel,
    beta_quantile,
    binom_cdf_partial,
    binom_partial_sums,
    clopper_pearson_lower,
    clopper_pearson_upper,
    order_stat_indices,
    std_normal_cdf,
    std_normal_inv_cdf,
)


def exact_partial(j, N, q: Fraction) -> Fraction:
    return sum((math.comb(N, i) * q ** i * (1 - q) ** (N - i) for i in range(1, j + 1)), Fraction(0))


class TestNormal:
    def test_median(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_inv_cdf(0.5) == 0.0

    def test_phi_one_against_mpmath(self):
        mpmath.mp.dps = 40
        ref = float(mpmath.ncdf(1))
        assert std_normal_cdf(1.0) == pytest.approx(ref, rel=1e-15)
        assert ref == pytest.approx(0.8413447460685429)

    @given(st.floats(-30, 30))
    def test_symmetry(self, x):
        assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-14

    def test_quantile_975(self):
        assert std_normal_inv_cdf(0.975) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_inverse_pair(self):
        xs = np.linspace(-6, 6, 2001)
        back = std_normal_inv_cdf(std_normal_cdf(xs))
        assert np.max(np.abs(back - xs)) < 1e-9

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_domain(self, p):
        with pytest.raises(DomainError):
            std_normal_inv_cdf(p)

    def test_vectorised_cdf(self):
        out = std_normal_cdf(np.array([-1.0, 0.0, 1.0]))
        assert out.shape == (3,) and out[1] == 0.5


class TestBetaQuantile:
    @given(st.floats(1e-6, 1 - 1e-6))
    def test_uniform(self, q):
        assert beta_quantile(q, 1, 1) == pytest.approx(q, rel=1e-8)

    @pytest.mark.parametrize("q,a,expected", [(0.05, 10, 0.741134), (0.001, 100, 0.933254)])
    def test_closed_form_power(self, q, a, expected):
        got = beta_quantile(q, a, 1)
        assert got == pytest.approx(q ** (1 / a), rel=1e-8)
        assert got == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("a,b", [(3, 5), (0.5, 0.5), (200, 3), (1, 400)])
    def test_against_mpmath(self, a, b):
        mpmath.mp.dps = 30
        for q in (1e-5, 0.01, 0.5, 0.99):
            x = beta_quantile(q, a, b)
            assert float(mpmath.betainc(a, b, 0, x, regularized=True)) == pytest.approx(q, rel=1e-7)

    @pytest.mark.parametrize("q,a,b", [(0.0, 2, 3), (1.0, 2, 3), (0.5, 0, 1)])
    def test_domain(self, q, a, b):
        with pytest.raises(DomainError):
            beta_quantile(q, a, b)


class TestBinomialSums:
    def test_examples(self):
        assert binom_cdf_partial(0, 3, 0.5) == 0.0
        assert binom_cdf_partial(3, 3, 0.5) == pytest.approx(0.875, abs=1e-15)
        assert binom_cdf_partial(1, 3, 0.5) == pytest.approx(0.375, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 50), st.data(), st.fractions(Fraction(1, 1000), Fraction(999, 1000)))
    def test_matches_exact_rationals(self, N, data, q):
        j = data.draw(st.integers(0, N))
        exact = exact_partial(j, N, q)
        assert abs(binom_cdf_partial(j, N, float(q)) - float(exact)) <= 1e-12

    def test_vector_matches_scalar(self):
        S = binom_partial_sums(20, 0.3)
        for j in range(21):
            assert S[j] == pytest.approx(binom_cdf_partial(j, 20, 0.3), abs=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            binom_cdf_partial(5, 3, 0.5)


class TestClopperPearson:
    def test_degenerate_conventions(self):
        assert clopper_pearson_lower(0, 100, 0.001) == 0.0
        assert clopper_pearson_upper(100, 100, 0.001) == 1.0

    def test_closed_forms(self):
        assert clopper_pearson_lower(100, 100, 0.001) == pytest.approx(0.933254, abs=1e-6)
        assert clopper_pearson_upper(0, 100, 0.001) == pytest.approx(0.066746, abs=1e-6)

    @given(st.integers(1, 200), st.data())
    def test_bounds_bracket_estimate(self, N, data):
        k = data.draw(st.integers(0, N))
        lo = clopper_pearson_lower(k, N, 0.01)
        hi = clopper_pearson_upper(k, N, 0.01)
        assert 0.0 <= lo <= k / N <= hi <= 1.0

    def test_mirror_symmetry(self):
        for k in range(0, 51, 7):
            assert clopper_pearson_upper(k, 50, 0.02) == pytest.approx(1 - clopper_pearson_lower(50 - k, 50, 0.02))

    def test_coverage_small(self):
        rng = np.random.default_rng(0)
        p, N, a = 0.7, 60, 0.05
        draws = rng.binomial(N, p, size=2000)
        low = np.array([clopper_pearson_lower(int(k), N, a) for k in draws])
        assert np.mean(low <= p) >= 1 - a - 3 * math.sqrt(a * (1 - a) / 2000)

    def test_confidence_level(self):
        assert ConfidenceLevel(0.001, 30).per_test_alpha == pytest.approx(0.001 / 30)
        with pytest.raises(DomainError):
            ConfidenceLevel(1.5)


class TestOrderStatIndices:
    def test_abstain_at_zero_radius_small_n(self):
        l, _ = order_stat_indices(3, 0.05, 0.0, 1.0)
        assert l is None

    def test_large_radius_small_n(self):
        l, _ = order_stat_indices(3, 0.05, 3.0, 1.0)
        assert l == 3

    @pytest.mark.parametrize("N,alpha,ratio", [(10, 0.05, 0.5), (50, 0.01, 1.0), (200, 0.001, 2.0)])
    def test_brute_force_scan(self, N, alpha, ratio):
        qlo = Fraction(float(std_normal_cdf(-ratio)))
        qhi = Fraction(float(std_normal_cdf(ratio)))
        want_l = [j for j in range(1, N + 1) if 1 - exact_partial(j, N, qlo) >= 1 - Fraction(alpha)]
        want_h = [j for j in range(1, N + 1) if exact_partial(j, N, qhi) >= 1 - Fraction(alpha)]
        l, h = order_stat_indices(N, alpha, ratio, 1.0)
        assert l == (max(want_l) if want_l else None)
        assert h == (min(want_h) if want_h else None)
