"""Log-space special functions used by the radial reductions.

Everything here returns natural logarithms so that dimensions in the
thousands never materialize numbers outside the double range.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

_TINY = 1e-300
_CF_EPS = 1e-15
_CF_MAXITER = 2000


def log_sphere_surface(n: int) -> float:
    """log of the surface measure of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise ValueError(f"sphere surface needs n >= 1, got {n}")
    return math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)


def log_unit_ball_volume(n: int) -> float:
    if n < 1:
        raise ValueError(f"ball volume needs n >= 1, got {n}")
    return log_sphere_surface(n) - math.log(n)


def log_beta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(np.add(a, b))


def _log_cf(a, b, x):
    """log of the Lentz-evaluated continued fraction for I_x(a, b).

    Valid (fast convergence) for x < (a + 1) / (a + b + 2).  Iterates are
    ratios of consecutive convergents, so they stay O(1) however large a is.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    a, b, x = np.broadcast_arrays(a, b, x)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _CF_EPS
        if done.all():
            break
    else:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return np.log(h)


def log_betainc(a, b, x, y=None):
    """log of the regularized incomplete beta function I_x(a, b).

    Vectorized over all arguments.  Returns -inf at x == 0 and 0 at x == 1.
    ``y`` may carry an accurately computed 1 - x for the complementary branch.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    y = 1.0 - x if y is None else np.asarray(y, dtype=float)
    a, b, x, y = np.broadcast_arrays(a, b, x, y)
    out = np.empty(x.shape)
    out[x <= 0.0] = -np.inf
    out[y <= 0.0] = 0.0
    inner = (x > 0.0) & (y > 0.0)
    if not inner.any():
        return out[()] if out.ndim == 0 else out
    ai, bi, xi, yi = a[inner], b[inner], x[inner], y[inner]
    direct = xi < (ai + 1.0) / (ai + bi + 2.0)
    res = np.empty(xi.shape)
    if direct.any():
        aa, bb, xx = ai[direct], bi[direct], xi[direct]
        front = aa * np.log(xx) + bb * np.log1p(-xx) - np.log(aa) - log_beta(aa, bb)
        res[direct] = front + _log_cf(aa, bb, xx)
    flip = ~direct
    if flip.any():
        aa, bb, xx = bi[flip], ai[flip], yi[flip]
        front = aa * np.log(xx) + bb * np.log1p(-xx) - np.log(aa) - log_beta(aa, bb)
        comp = front + _log_cf(aa, bb, xx)
        res[flip] = np.log1p(-np.exp(comp))
    out[inner] = res
    return out[()] if out.ndim == 0 else out


def log_sine_power_integral(m, alpha):
    """log of the integral of sin(b)^m over b in [0, alpha], alpha in [0, pi].

    Uses sin^2 alpha and the side of pi/2 explicitly; see ``log_sine_power_integral_sq``.
    """
    alpha = np.asarray(alpha, dtype=float)
    sin2 = np.sin(alpha) ** 2
    return log_sine_power_integral_sq(m, sin2, alpha > 0.5 * np.pi, np.cos(alpha) ** 2)


def log_sine_power_integral_sq(m, sin2, obtuse, cos2=None):
    """Same integral, parametrized by sin^2(alpha) and whether alpha > pi/2.

    For alpha <= pi/2 the integral is B(x; (m+1)/2, 1/2) / 2 with x = sin^2 alpha;
    past pi/2 it is the full B((m+1)/2, 1/2) minus the mirrored half.  Near
    pi/2, alpha is badly determined by sin^2, so pass cos^2 when it is known
    to full precision.
    """
    a = 0.5 * (np.asarray(m, dtype=float) + 1.0)
    sin2 = np.clip(np.asarray(sin2, dtype=float), 0.0, 1.0)
    cos2 = 1.0 - sin2 if cos2 is None else np.clip(np.asarray(cos2, dtype=float), 0.0, 1.0)
    obtuse = np.asarray(obtuse, dtype=bool)
    a, sin2, cos2, obtuse = np.broadcast_arrays(a, sin2, cos2, obtuse)
    lb = log_beta(a, 0.5)
    li = log_betainc(a, 0.5, sin2, cos2)
    acute_val = lb + li - math.log(2.0)
    obtuse_val = lb + np.log1p(-0.5 * np.exp(li))
    res = np.where(obtuse, obtuse_val, acute_val)
    return res[()] if np.ndim(res) == 0 else res
