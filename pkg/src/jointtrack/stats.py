"""Chi-squared distribution functions built on the lower incomplete gamma.

Self-contained (series + continued fraction) so the consistency statistics
do not pull in a stats dependency; results are pinned against known
percentile anchors in the test suite.
"""

from __future__ import annotations

import math

_MAX_ITER = 500
_EPS = 1e-14
_TINY = 1e-300


def _gamma_series(a: float, x: float) -> float:
    # P(a, x) by series expansion, valid for x < a + 1.
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Q(a, x) by Lentz's continued fraction, valid for x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def chi2_cdf(x: float, dof: float) -> float:
    """CDF of the chi-squared distribution with ``dof`` degrees of freedom."""
    if x <= 0:
        return 0.0
    return gammainc_lower(dof / 2.0, x / 2.0)


def chi2_logpdf(x: float, dof: float) -> float:
    if x <= 0:
        return -math.inf
    k = dof / 2.0
    return (k - 1.0) * math.log(x) - x / 2.0 - math.lgamma(k) - k * math.log(2.0)


def chi2_pdf(x: float, dof: float) -> float:
    return math.exp(chi2_logpdf(x, dof))


def chi2_ppf(p: float, dof: float) -> float:
    """Inverse CDF by bisection; adequate for the percentile anchors used."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = 0.0, max(4.0 * dof, 10.0)
    while chi2_cdf(hi, dof) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
