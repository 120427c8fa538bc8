"""Special functions and distribution quantiles used by the interval
constructors.

Only the handful of functions the intervals need: a numerically stable
logistic, the standard normal CDF/quantile, and the Student t CDF/quantile
via the regularized incomplete beta function.  The t quantile is obtained
by bracketing plus safeguarded Newton iteration on the CDF, which stays
robust in the heavy-tailed df=1 case.
"""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_EXPIT_SATURATION = 36.0
_NORMAL = NormalDist()


def _check_probability(p, name="p"):
    p = float(p)
    if not 0.0 < p < 1.0 or math.isnan(p):
        raise ValueError(f"{name} must lie strictly in (0, 1), got {p!r}")
    return p


def _check_df(df):
    if df != int(df) or df < 1:
        raise ValueError(f"degrees of freedom must be an integer >= 1, got {df!r}")
    return int(df)


def expit(x):
    """Logistic function 1/(1+exp(-x)), stable for large |x|.

    Accepts a scalar or ndarray.  Saturates to exactly 0/1 beyond |x| > 36,
    where the true value is within one ulp of the saturated one; this keeps
    downstream weight products free of spurious under/overflow.
    """
    if isinstance(x, np.ndarray):
        clipped = np.clip(x, -_EXPIT_SATURATION, _EXPIT_SATURATION)
        out = np.empty_like(clipped, dtype=np.float64)
        pos = clipped >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-clipped[pos]))
        ex = np.exp(clipped[~pos])
        out[~pos] = ex / (1.0 + ex)
        out[x > _EXPIT_SATURATION] = 1.0
        out[x < -_EXPIT_SATURATION] = 0.0
        return out
    x = float(x)
    if math.isnan(x):
        raise ValueError("expit requires a finite argument")
    if x > _EXPIT_SATURATION:
        return 1.0
    if x < -_EXPIT_SATURATION:
        return 0.0
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def log_gamma(x):
    """log Gamma(x) for x > 0 (delegates to math.lgamma)."""
    x = float(x)
    if x <= 0.0 or math.isnan(x):
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def _inc_beta_cf(a, b, x):
    """Continued fraction for the regularized incomplete beta, evaluated
    with the modified Lentz scheme.  Valid for x < (a+1)/(a+b+2)."""
    tiny = 1e-300
    eps = 1e-16
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        coef = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed to "
                          f"converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Monotone increasing in x with I_0 = 0 and I_1 = 1.
    """
    a, b, x = float(a), float(b), float(x)
    if a <= 0.0 or b <= 0.0:
        raise ValueError("reg_inc_beta requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError(f"reg_inc_beta requires x in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (log_gamma(a + b) - log_gamma(a) - log_gamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _inc_beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _inc_beta_cf(b, a, 1.0 - x) / b


def normal_cdf(x):
    """Standard normal CDF."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("normal_cdf requires a finite argument")
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_quantile(p):
    """Inverse standard normal CDF, polished to |cdf(q) - p| < 1e-12."""
    p = _check_probability(p)
    q = _NORMAL.inv_cdf(p)
    # one Newton step on the CDF removes the approximation's last bits
    if abs(q) < 37.0:
        pdf = math.exp(-0.5 * q * q) / _SQRT_2PI
        if pdf > 0.0:
            q -= (normal_cdf(q) - p) / pdf
    return q


def t_cdf(df, x):
    """CDF of the Student t distribution with integer df >= 1."""
    df = _check_df(df)
    x = float(x)
    if math.isnan(x):
        raise ValueError("t_cdf requires a finite argument")
    if x == 0.0:
        return 0.5
    z = df / (df + x * x)
    tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, z)
    return 1.0 - tail if x > 0 else tail


def _t_pdf(df, x):
    log_norm = (log_gamma(0.5 * (df + 1)) - log_gamma(0.5 * df)
                - 0.5 * math.log(df * math.pi))
    return math.exp(log_norm - 0.5 * (df + 1) * math.log1p(x * x / df))


def t_quantile(df, p):
    """Quantile of the Student t distribution with integer df >= 1.

    Inverts the CDF by bracketing plus Newton steps, falling back to
    bisection whenever a Newton step leaves the bracket.  The result q
    satisfies |t_cdf(df, q) - p| < 1e-12.
    """
    df = _check_df(df)
    p = _check_probability(p)
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(df, 1.0 - p)

    lo = 0.0
    hi = max(1.0, abs(normal_quantile(p)) * 2.0)
    while t_cdf(df, hi) < p:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("t_quantile bracket expansion failed")

    x = min(max(normal_quantile(p), lo + 1e-8), hi)
    for _ in range(200):
        f = t_cdf(df, x) - p
        if abs(f) < 1e-13:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        pdf = _t_pdf(df, x)
        if pdf > 0.0:
            step = f / pdf
            candidate = x - step
        else:
            candidate = math.inf
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if candidate == x:
            break
        x = candidate
    return x
