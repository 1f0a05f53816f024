"""Certified lower/upper bitwise-accuracy bounds for smoothed decoders.

Three constructions, one per smoothing method:

* multi-class: per-bit certified radii from Clopper-Pearson lower bounds on the
  majority-vote probability, Bonferroni-split over the m bits;
* multi-label: guaranteed overlap counts between the smoothed top-k label set
  and the ones (resp. zeros) of the ground-truth watermark;
* regression: order statistics of the per-sample BAs bracketing the quantiles
  Phi(-R/sigma) and Phi(R/sigma) of the noisy BA distribution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import Watermark
from .smoothing import (
    NoisyDecodeBatch,
    SmoothingMethod,
    smoothed_bits_multiclass,
)
from .stats import (
    _log_binom_terms,
    clopper_pearson_lower,
    clopper_pearson_upper,
    order_stat_indices,
    std_normal_inv_cdf,
)

DEFAULT_ALPHA = 0.001


@dataclass(frozen=True)
class CertifiedInterval:
    ba_lower: float
    ba_upper: float
    radius: float
    confidence: float
    method: SmoothingMethod

    def __post_init__(self):
        if not 0.0 <= self.ba_lower <= self.ba_upper <= 1.0:
            raise ValueError(f"invalid interval [{self.ba_lower}, {self.ba_upper}]")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, ba: float, tol: float = 1e-12) -> bool:
        return self.ba_lower - tol <= ba <= self.ba_upper + tol


@dataclass(frozen=True)
class BitCertificate:
    p_lower: float
    radius: float
    value: int


@dataclass(frozen=True)
class LabelProbBounds:
    """Sorted (nonincreasing) probability bounds for label membership.

    ``lower_for_ones``/``upper_for_zeros`` drive the guaranteed overlap with the
    ones of the watermark; the mirrored pair drives the overlap with its zeros.
    """

    lower_for_ones: tuple[float, ...]
    upper_for_zeros: tuple[float, ...]
    lower_for_zeros: tuple[float, ...] = ()
    upper_for_ones: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("lower_for_ones", "upper_for_zeros", "lower_for_zeros", "upper_for_ones"):
            vals = tuple(float(v) for v in getattr(self, name))
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, tuple(sorted(vals, reverse=True)))

    def swapped(self) -> "LabelProbBounds":
        return LabelProbBounds(self.lower_for_zeros, self.upper_for_ones,
                               self.lower_for_ones, self.upper_for_zeros)


# --------------------------------------------------------------------------
# multi-class
# --------------------------------------------------------------------------

def certified_radius_bit(p_lower: float, sigma: float) -> float:
    """sigma * Phi^-1(p_lower) for p_lower > 1/2, else 0."""
    if p_lower <= 0.5:
        return 0.0
    if p_lower >= 1.0:
        return float("inf")
    return sigma * std_normal_inv_cdf(p_lower)


def estimate_bit_certificates(batch: NoisyDecodeBatch, bits: Watermark, alpha: float,
                              sigma: float) -> list[BitCertificate]:
    m = batch.m
    per_test = alpha / m
    certs = []
    for i in range(m):
        ones = int(batch.bit_counts[i])
        successes = ones if bits[i] == 1 else batch.N - ones
        p_low = clopper_pearson_lower(successes, batch.N, per_test)
        certs.append(BitCertificate(p_low, certified_radius_bit(p_low, sigma), bits[i]))
    return certs


def certify_multiclass(bits: Watermark, certs, wt: Watermark, R: float,
                       confidence: float = 1.0 - DEFAULT_ALPHA) -> CertifiedInterval:
    b = bits.bits
    w = wt.bits
    robust = np.array([c.radius >= R for c in certs])
    m = wt.m
    lower = np.count_nonzero((b == w) & robust) / m
    upper = 1.0 - np.count_nonzero((b != w) & robust) / m
    return CertifiedInterval(lower, upper, R, confidence, SmoothingMethod.MULTI_CLASS)


# --------------------------------------------------------------------------
# multi-label
# --------------------------------------------------------------------------

def label_prob_bounds(batch: NoisyDecodeBatch, wt: Watermark, alpha: float) -> LabelProbBounds:
    """Clopper-Pearson bounds on Pr(label in top-k') for every label."""
    per_test = alpha / batch.m
    ones = set(wt.ones_indices().tolist())
    lo, hi = {}, {}
    for i, c in enumerate(batch.label_counts):
        lo[i] = clopper_pearson_lower(int(c), batch.N, per_test)
        hi[i] = clopper_pearson_upper(int(c), batch.N, per_test)
    zeros = [i for i in range(batch.m) if i not in ones]
    return LabelProbBounds(
        lower_for_ones=[lo[i] for i in ones],
        upper_for_zeros=[hi[i] for i in zeros],
        lower_for_zeros=[lo[i] for i in zeros],
        upper_for_ones=[hi[i] for i in ones],
    )


def _solve_e(lower_in, upper_out, k: int, k_prime: int, R: float, sigma: float) -> int:
    """Largest e' whose guaranteed overlap condition holds; 0 if none does."""
    p_in = np.asarray(lower_in, dtype=np.float64)
    d = p_in.size
    if d == 0 or k < 1:
        return 0
    n_out = len(upper_out)
    ratio = R / sigma
    # labels that do not exist contribute probability 0
    p_out = np.zeros(max(k, n_out))
    p_out[:n_out] = upper_out
    kp = float(k_prime)
    best = 0
    for e in range(1, min(d, k) + 1):
        mu = k - e + 1
        tail_in = p_in[e - 1:]                       # p_s_e .. p_s_d, length eta
        u = np.arange(1, tail_in.size + 1)
        p_su = np.minimum(np.cumsum(tail_in) / kp, 1.0)
        lhs = max(special.ndtr(special.ndtri(tail_in[0]) - ratio),
                  float(np.max(kp / u * special.ndtr(special.ndtri(p_su) - ratio))))
        head_out = p_out[:mu]                        # p_t_1 .. p_t_mu
        v = np.arange(1, mu + 1)
        p_tv = np.minimum(np.cumsum(head_out[::-1]) / kp, 1.0)
        rhs = min(special.ndtr(special.ndtri(head_out[-1]) + ratio),
                  float(np.min(kp / v * special.ndtr(special.ndtri(p_tv) + ratio))))
        if lhs > rhs:
            best = e
    # pigeonhole: k labels cannot all fit outside when only n_out exist there
    return max(best, k - n_out)


def solve_e_lower(bounds: LabelProbBounds, k: int, k_prime: int, R: float, sigma: float) -> int:
    """Certified minimum of |ones(wt) & top-k(x + delta)| over ||delta|| < R."""
    return _solve_e(bounds.lower_for_ones, bounds.upper_for_zeros, k, k_prime, R, sigma)


def solve_e_upper(bounds: LabelProbBounds, k: int, k_prime: int, R: float, sigma: float) -> int:
    """Certified minimum of |zeros(wt) & top-k(x + delta)| over ||delta|| < R."""
    return _solve_e(bounds.lower_for_zeros, bounds.upper_for_ones, k, k_prime, R, sigma)


def certify_multilabel(e_lower: int, e_upper: int, wt: Watermark, k: int, R: float = 0.0,
                       confidence: float = 1.0 - DEFAULT_ALPHA) -> CertifiedInterval:
    d = wt.ones()
    m = wt.m
    lower = 1.0 - (d + k - 2 * e_lower) / m
    upper = 1.0 - (d - k + 2 * e_upper) / m
    lower = min(max(lower, 0.0), 1.0)
    upper = min(max(upper, 0.0), 1.0)
    return CertifiedInterval(lower, max(lower, upper), R, confidence, SmoothingMethod.MULTI_LABEL)


# --------------------------------------------------------------------------
# regression (median smoothing)
# --------------------------------------------------------------------------

def _exact_order_indices(N: int, alpha: float, R: float, sigma: float):
    """Order-statistic indices from the full binomial tail (i = 0 included)."""
    q = float(special.ndtr(-R / sigma))
    p = float(special.ndtr(R / sigma))
    cdf_q = np.cumsum(np.exp(_log_binom_terms(N, q)))   # cdf_q[i] = Pr(Bin <= i)
    cdf_p = np.cumsum(np.exp(_log_binom_terms(N, p)))
    j = np.arange(1, N + 1)
    ok_l = j[cdf_q[j - 1] <= alpha]
    ok_h = j[cdf_p[j - 1] >= 1.0 - alpha]
    return (int(ok_l[-1]) if ok_l.size else None, int(ok_h[0]) if ok_h.size else None)


def regression_indices(N: int, alpha: float, R: float, sigma: float):
    """Order-statistic ranks (1-based, counted from the smallest BA) for the bounds.

    Combines :func:`order_stat_indices` with the exact binomial tail and keeps
    the more conservative rank on each side.
    """
    l_lit, h_lit = order_stat_indices(N, alpha, R, sigma)
    l_ex, h_ex = _exact_order_indices(N, alpha, R, sigma)
    l_star = None if l_lit is None or l_ex is None else min(l_lit, l_ex)
    h_star = None if h_lit is None or h_ex is None else max(h_lit, h_ex)
    return l_star, h_star


def certify_regression(batch: NoisyDecodeBatch, alpha: float, sigma: float, R: float,
                       _indices=None) -> CertifiedInterval:
    ascending = np.asarray(batch.ba_samples)[::-1]
    l_star, h_star = _indices if _indices is not None else regression_indices(batch.N, alpha, R, sigma)
    lower = float(ascending[l_star - 1]) if l_star is not None else 0.0
    upper = float(ascending[h_star - 1]) if h_star is not None else 1.0
    return CertifiedInterval(lower, upper, R, 1.0 - alpha, SmoothingMethod.REGRESSION)


# --------------------------------------------------------------------------
# whole-grid driver
# --------------------------------------------------------------------------

def certify_batch(batch: NoisyDecodeBatch, wt: Watermark, method, alpha: float, sigma: float,
                  R_grid, k: int | None = None, k_prime: int | None = None) -> list[CertifiedInterval]:
    """Certified intervals for every radius in ``R_grid`` from one batch."""
    method = SmoothingMethod(method)
    conf = 1.0 - alpha
    if method is SmoothingMethod.MULTI_CLASS:
        bits = smoothed_bits_multiclass(batch)
        certs = estimate_bit_certificates(batch, bits, alpha, sigma)
        return [certify_multiclass(bits, certs, wt, R, conf) for R in R_grid]
    if method is SmoothingMethod.MULTI_LABEL:
        if k is None:
            k = max(1, wt.ones())
        if k_prime is None:
            k_prime = batch.k_prime
        bounds = label_prob_bounds(batch, wt, alpha)
        return [certify_multilabel(solve_e_lower(bounds, k, k_prime, R, sigma),
                                   solve_e_upper(bounds, k, k_prime, R, sigma), wt, k, R, conf)
                for R in R_grid]
    return [certify_regression(batch, alpha, sigma, R) for R in R_grid]


__all__ = [
    "BitCertificate", "CertifiedInterval", "LabelProbBounds", "certified_radius_bit",
    "certify_batch", "certify_multiclass", "certify_multilabel", "certify_regression",
    "estimate_bit_certificates", "label_prob_bounds", "regression_indices",
    "solve_e_lower", "solve_e_upper",
]
