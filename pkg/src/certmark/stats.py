"""Statistical primitives used by the certification math.

Gaussian CDF/quantile, Beta quantile, partial binomial sums, one-sided
Clopper-Pearson bounds and the order-statistic index search for median
smoothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ConfidenceLevel:
    """Overall failure probability split evenly across ``n_tests`` bounds."""

    alpha: float
    n_tests: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_tests < 1:
            raise DomainError("n_tests must be positive")

    @property
    def per_test_alpha(self) -> float:
        return self.alpha / self.n_tests


def std_normal_cdf(x):
    """Standard normal CDF in extended (long double) precision.

    For x > 0 the value is formed as ``1 - Phi(-x)`` in long double so the
    upper tail keeps enough digits for the quantile to invert it; a binary64
    result would pin Phi(6) to within 1e-16 of 1 and lose x to ~1e-8.
    """
    arr = np.asarray(x, dtype=np.float64)
    lower = special.ndtr(-np.abs(arr)).astype(np.longdouble)
    out = np.where(arr > 0, np.longdouble(1) - lower, lower)
    return out[()] if out.ndim == 0 else out


def std_normal_inv_cdf(p):
    """Standard normal quantile; raises DomainError outside (0, 1).

    Accepts the long double values of :func:`std_normal_cdf`; the upper half
    is inverted through the exact tail ``1 - p``.
    """
    arr = np.asarray(p)
    if not np.issubdtype(arr.dtype, np.floating) or arr.dtype.itemsize < 8:
        arr = arr.astype(np.float64)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"normal quantile needs p in (0, 1), got {p}")
    upper = arr > 0.5
    tail = np.where(upper, 1 - arr, arr).astype(np.float64)
    z = special.ndtri(tail)
    z = np.where(upper, -z, z)
    return float(z) if z.ndim == 0 else z


def _phi_inv_ext(p: float) -> float:
    """Quantile extended to the closed interval: 0 -> -inf, 1 -> +inf."""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return float(special.ndtri(p))


def _phi_ext(x: float) -> float:
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    return std_normal_cdf(x)


def beta_quantile(q: float, a: float, b: float, tol: float = 1e-10) -> float:
    """q-th quantile of Beta(a, b).

    Safeguarded Newton iteration on the regularized incomplete beta function,
    falling back to bisection whenever a Newton step leaves the bracket.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if a <= 0 or b <= 0:
        raise DomainError("Beta shape parameters must be positive")

    lo, hi = 0.0, 1.0
    x = float(special.betaincinv(a, b, q))
    if not 0.0 < x < 1.0:
        x = 0.5
    log_norm = special.betaln(a, b)
    for _ in range(200):
        f = special.betainc(a, b, x) - q
        if f == 0.0:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        logpdf = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_norm
        pdf = math.exp(logpdf) if logpdf < 700 else math.inf
        step = f / pdf if pdf > 1e-300 else math.nan
        nx = x - step
        if not lo < nx < hi or not math.isfinite(nx):
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-16 * max(x, 1e-300) or hi - lo <= 1e-17:
            x = nx
            break
        x = nx
    if abs(special.betainc(a, b, x) - q) > max(tol, 1e-6 * q):
        # the tolerance test keeps pathological shapes from passing silently
        raise ArithmeticError(f"beta_quantile failed to converge for q={q}, a={a}, b={b}")
    return x


def _log_binom_terms(N: int, q: float) -> np.ndarray:
    """log of C(N,i) q^i (1-q)^(N-i) for i = 0..N."""
    i = np.arange(N + 1, dtype=np.float64)
    logc = special.gammaln(N + 1.0) - special.gammaln(i + 1.0) - special.gammaln(N - i + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.where(i > 0, i * math.log(q) if q > 0 else -np.inf, 0.0)
        l1q = np.where(N - i > 0, (N - i) * math.log1p(-q) if q < 1 else -np.inf, 0.0)
    return logc + lq + l1q


def binom_cdf_partial(j: int, N: int, q: float) -> float:
    """Sum over i = 1..j of C(N,i) q^i (1-q)^(N-i).

    The sum deliberately starts at i = 1; the i = 0 term is excluded.
    """
    if not 0 <= j <= N:
        raise DomainError(f"need 0 <= j <= N, got j={j}, N={N}")
    if j == 0:
        return 0.0
    terms = np.exp(_log_binom_terms(N, q)[1:j + 1])
    return math.fsum(terms.tolist())


def binom_partial_sums(N: int, q: float) -> np.ndarray:
    """Vector S with S[j] = binom_cdf_partial(j, N, q) for j = 0..N."""
    terms = np.exp(_log_binom_terms(N, q))
    out = np.empty(N + 1)
    out[0] = 0.0
    out[1:] = np.cumsum(terms[1:])
    return out


def clopper_pearson_lower(successes: int, N: int, per_test_alpha: float) -> float:
    if not 0 <= successes <= N or N < 1:
        raise DomainError(f"invalid binomial counts {successes}/{N}")
    if successes == 0:
        return 0.0
    return beta_quantile(per_test_alpha, successes, N - successes + 1)


def clopper_pearson_upper(successes: int, N: int, per_test_alpha: float) -> float:
    if not 0 <= successes <= N or N < 1:
        raise DomainError(f"invalid binomial counts {successes}/{N}")
    if successes == N:
        return 1.0
    return beta_quantile(1.0 - per_test_alpha, successes + 1, N - successes)


def order_stat_indices(N: int, alpha: float, R: float, sigma: float) -> tuple[int | None, int | None]:
    """1-based order-statistic indices (l*, h*) for median smoothing bounds.

    l* is the largest j with 1 - S_j(Phi(-R/sigma)) >= 1 - alpha and h* the
    smallest j with S_j(Phi(R/sigma)) >= 1 - alpha, where S_j is
    :func:`binom_cdf_partial`. ``None`` means no index qualifies (abstain).
    """
    if N < 1:
        raise DomainError("N must be positive")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    ratio = R / sigma
    s_low = binom_partial_sums(N, std_normal_cdf(-ratio))[1:]
    s_high = binom_partial_sums(N, std_normal_cdf(ratio))[1:]
    ok_low = np.flatnonzero(1.0 - s_low >= 1.0 - alpha)
    ok_high = np.flatnonzero(s_high >= 1.0 - alpha)
    l_star = int(ok_low[-1]) + 1 if ok_low.size else None
    h_star = int(ok_high[0]) + 1 if ok_high.size else None
    return l_star, h_star
