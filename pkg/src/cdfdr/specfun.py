"""Special functions used by the distribution evaluations.

Everything here accepts a scalar or an array. Scalars come back as Python
floats, arrays as ``float64`` arrays. Invalid arguments raise
:class:`DomainError` instead of producing NaN.
"""

import math

import numpy as np

__all__ = [
    "DomainError",
    "log_gamma",
    "log_beta",
    "reg_inc_beta",
    "normal_cdf",
    "normal_sf",
    "normal_pdf",
    "normal_quantile",
    "student_t_cdf",
    "digamma",
    "trigamma",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

_CF_MAX_ITER = 300
_CF_EPS = 1e-14
_TINY = 1e-300


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


_lgamma = np.frompyfunc(math.lgamma, 1, 1)
_erfc = np.frompyfunc(math.erfc, 1, 1)


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    arr = _as_float_array(x, "x")
    if np.any(arr <= 0):
        raise DomainError("log_gamma requires x > 0")
    return _out(np.asarray(_lgamma(arr), dtype=float), arr.ndim == 0)


_STIRLING_FROM = 20.0


def _stirling_tail(x):
    # lgamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2], valid for x >= 20.
    inv = 1.0 / x
    inv2 = inv * inv
    return inv * (1.0 / 12 + inv2 * (-1.0 / 360 + inv2 * (1.0 / 1260 + inv2 * (
        -1.0 / 1680 + inv2 / 1188))))


def log_beta(a, b):
    """ln B(a, b) for a, b > 0.

    When exactly one argument is large the lgamma difference cancels badly,
    so that case goes through a Stirling difference instead.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    direct = log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    big = np.maximum(a, b)
    small = np.minimum(a, b)
    lopsided = (big >= _STIRLING_FROM) & (small < _STIRLING_FROM)
    if not np.any(lopsided):
        return direct
    big_s = np.where(lopsided, big, _STIRLING_FROM)
    total = big_s + small
    stirling = (log_gamma(small) - small * np.log(total)
                - (big_s - 0.5) * np.log1p(small / big_s) + small
                + _stirling_tail(big_s) - _stirling_tail(total))
    res = np.where(lopsided, stirling, direct)
    return _out(res, res.ndim == 0)


def _betacf(a, b, x):
    # Modified Lentz evaluation of the incomplete beta continued fraction,
    # vectorized over broadcast arrays. Valid where x < (a+1)/(a+b+2).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _CF_EPS
        if not active.any():
            return h
    raise DomainError(
        f"incomplete beta continued fraction did not converge in {_CF_MAX_ITER} iterations"
    )


def _inc_beta(x, y, a, b):
    # I_x(a, b) with y = 1 - x supplied separately so callers can avoid
    # cancellation when x is close to 1.
    x, y, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, a, b)))
    out = np.empty(x.shape)
    lo = x <= 0.0
    hi = y <= 0.0
    out[lo] = 0.0
    out[hi] = 1.0
    inner = ~(lo | hi)
    if not inner.any():
        return out
    xi, yi, ai, bi = x[inner], y[inner], a[inner], b[inner]
    log_x = np.where(yi < 0.5, np.log1p(-np.minimum(yi, 0.5)), np.log(xi))
    log_y = np.where(xi < 0.5, np.log1p(-np.minimum(xi, 0.5)), np.log(yi))
    log_front = ai * log_x + bi * log_y - log_beta(ai, bi)
    front = np.exp(log_front)
    swap = xi > (ai + 1.0) / (ai + bi + 2.0)
    res = np.empty(xi.shape)
    keep = ~swap
    if keep.any():
        res[keep] = front[keep] * _betacf(ai[keep], bi[keep], xi[keep]) / ai[keep]
    if swap.any():
        res[swap] = 1.0 - front[swap] * _betacf(bi[swap], ai[swap], yi[swap]) / bi[swap]
    out[inner] = np.clip(res, 0.0, 1.0)
    return out


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function I_x(a, b).

    Uses the continued fraction with the usual switch to I_{1-x}(b, a)
    for x above (a+1)/(a+b+2).
    """
    xa = _as_float_array(x, "x")
    aa = _as_float_array(a, "a")
    ba = _as_float_array(b, "b")
    if np.any((xa < 0) | (xa > 1)):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")
    if np.any(aa <= 0) or np.any(ba <= 0):
        raise DomainError("reg_inc_beta requires a > 0 and b > 0")
    res = _inc_beta(xa, 1.0 - xa, aa, ba)
    return _out(res, res.ndim == 0)


def normal_cdf(z):
    """Standard normal CDF."""
    arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("normal_cdf of NaN")
    res = 0.5 * np.asarray(_erfc(-arr / _SQRT2), dtype=float)
    return _out(res, arr.ndim == 0)


def normal_sf(z):
    """Upper tail 1 - Phi(z), accurate for large positive z."""
    arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("normal_sf of NaN")
    res = 0.5 * np.asarray(_erfc(arr / _SQRT2), dtype=float)
    return _out(res, arr.ndim == 0)


def normal_pdf(z):
    arr = np.asarray(z, dtype=float)
    res = np.exp(-0.5 * arr * arr) / _SQRT2PI
    return _out(res, arr.ndim == 0)


# Acklam's rational approximation, relative error ~1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    q = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)
    if low.any():
        t = np.sqrt(-2.0 * np.log(p[low]))
        q[low] = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    if high.any():
        t = np.sqrt(-2.0 * np.log1p(-p[high]))
        q[high] = -(((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    if mid.any():
        r = p[mid] - 0.5
        s = r * r
        q[mid] = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r / (
            ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0)
    return q


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on the open interval (0, 1).

    Rational approximation followed by one Halley step against the
    lower-tail probability. Upper-half arguments are handled through the
    reflection q(p) = -q(1 - p), which is exact in floating point for p >= 0.5.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any((arr <= 0) | (arr >= 1)):
        raise DomainError("normal_quantile requires 0 < p < 1")
    flat = np.atleast_1d(arr).ravel()
    upper = flat > 0.5
    tail = np.where(upper, 1.0 - flat, flat)
    x = _acklam(tail)
    e = normal_cdf(x) - tail
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(upper, -x, x)
    res = x.reshape(arr.shape)
    return _out(res, arr.ndim == 0)


def student_t_cdf(t, df):
    """CDF of Student's t with ``df`` degrees of freedom."""
    ta = _as_float_array(t, "t")
    dfa = _as_float_array(df, "df")
    if np.any(dfa <= 0):
        raise DomainError("student_t_cdf requires df > 0")
    ta, dfa = np.broadcast_arrays(ta, dfa)
    t2 = ta * ta
    x = dfa / (dfa + t2)
    y = t2 / (dfa + t2)
    tail = 0.5 * _inc_beta(x, y, 0.5 * dfa, 0.5)
    res = np.where(ta > 0, 1.0 - tail, tail)
    return _out(res, res.ndim == 0)


# Bernoulli-number coefficients of the asymptotic expansions.
_DIGAMMA_SERIES = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
                   -691.0 / 32760, 1.0 / 12)
_TRIGAMMA_SERIES = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
                    -691.0 / 2730, 7.0 / 6)
_ASYMPTOTIC_FROM = 10.0


def _positive(x, name):
    arr = _as_float_array(x, "x")
    if np.any(arr <= 0):
        raise DomainError(f"{name} requires x > 0")
    return arr


def digamma(x):
    """psi(x) for x > 0 via upward recurrence and the asymptotic series."""
    arr = _positive(x, "digamma")
    v = np.array(arr, dtype=float, copy=True, ndmin=1)
    acc = np.zeros_like(v)
    while True:
        small = v < _ASYMPTOTIC_FROM
        if not small.any():
            break
        acc[small] -= 1.0 / v[small]
        v[small] += 1.0
    inv2 = 1.0 / (v * v)
    series = np.zeros_like(v)
    for coef in reversed(_DIGAMMA_SERIES):
        series = (series + coef) * inv2
    res = acc + np.log(v) - 0.5 / v - series
    return _out(res.reshape(arr.shape), arr.ndim == 0)


def trigamma(x):
    """psi'(x) for x > 0."""
    arr = _positive(x, "trigamma")
    v = np.array(arr, dtype=float, copy=True, ndmin=1)
    acc = np.zeros_like(v)
    while True:
        small = v < _ASYMPTOTIC_FROM
        if not small.any():
            break
        acc[small] += 1.0 / (v[small] * v[small])
        v[small] += 1.0
    inv = 1.0 / v
    inv2 = inv * inv
    series = np.zeros_like(v)
    for coef in reversed(_TRIGAMMA_SERIES):
        series = (series + coef) * inv2
    res = acc + inv + 0.5 * inv2 + series * inv
    return _out(res.reshape(arr.shape), arr.ndim == 0)
