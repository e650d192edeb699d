"""Ball integrals of radial densities reduced to one radial variable.

A ball B(z, R) in R^n with |z| = s meets the sphere of radius t in a cap
of half-angle alpha(t).  Writing A_n(t) for the measure of that cap on the
unit sphere,

    mu(B(z, R)) = int_{(s-R)_+}^{s+R} w0(t) A_n(t) t^(n-1) dt,

and every factor is carried as a logarithm so n can be in the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import RadialDensity, constant
from .quadrature import DivergenceError, log_integrate
from .special import log_sine_power_integral_sq, log_sphere_surface

__all__ = [
    "BallSpec", "LogMeasure", "QuadratureConfig", "DivergenceError",
    "log_sphere_surface", "log_ball_volume", "cap_angle", "cap_measure",
    "kernel_phi", "log_kernel_phi", "ball_measure", "ball_average",
    "radial_integral", "mc_ball_measure",
]


@dataclass(frozen=True)
class BallSpec:
    """A ball in R^n up to rotation: dimension, center distance s, radius R."""

    n: int
    s: float
    R: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if not self.R > 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if not self.s >= 0:
            raise ValueError(f"center distance must be >= 0, got {self.s}")

    @property
    def T(self) -> float:
        return math.hypot(self.s, self.R)

    @property
    def support(self) -> tuple[float, float]:
        return max(self.s - self.R, 0.0), self.s + self.R

    def scaled(self, R: float) -> "BallSpec":
        return BallSpec(self.n, self.s, R)


@dataclass(frozen=True, order=True)
class LogMeasure:
    """A nonnegative quantity stored as its natural logarithm."""

    log_value: float

    @classmethod
    def of(cls, x: float) -> "LogMeasure":
        if x < 0:
            raise ValueError("LogMeasure holds nonnegative quantities")
        return cls(math.log(x) if x > 0 else -math.inf)

    @property
    def value(self) -> float:
        """exp(log_value); overflows to inf only when the quantity itself does."""
        if self.log_value > 709.7:
            return math.inf
        return math.exp(self.log_value)

    def __float__(self):
        return self.value

    def __mul__(self, other: "LogMeasure") -> "LogMeasure":
        return LogMeasure(self.log_value + other.log_value)

    def __truediv__(self, other: "LogMeasure") -> "LogMeasure":
        if other.log_value == -math.inf:
            raise ZeroDivisionError("division by a zero measure")
        return LogMeasure(self.log_value - other.log_value)

    def __add__(self, other: "LogMeasure") -> "LogMeasure":
        return LogMeasure(float(np.logaddexp(self.log_value, other.log_value)))

    def ratio(self, other: "LogMeasure") -> float:
        return (self / other).value


@dataclass(frozen=True)
class QuadratureConfig:
    rtol: float = 1e-9
    max_rounds: int = 40
    # "graded": geometric mesh toward breakpoints plus power-law tails;
    # "plain": breakpoints only, no tail model
    singularity_mode: str = "graded"
    mc_samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if self.mc_samples < 10_000:
            raise ValueError("Monte Carlo oracle needs at least 1e4 samples")
        if self.singularity_mode not in ("graded", "plain"):
            raise ValueError(f"unknown singularity mode {self.singularity_mode!r}")


DEFAULT_QUAD = QuadratureConfig()


def log_ball_volume(n: int, R: float) -> float:
    return log_sphere_surface(n) + n * math.log(R) - math.log(n)


def cap_angle(spec: BallSpec, t):
    """Angle at the origin between z and the points of |x| = t on the ball's boundary."""
    if spec.s == 0:
        raise ValueError("cap angle is undefined for a centered ball (s = 0); use the full sphere")
    s, R = spec.s, spec.R
    t = np.asarray(t, dtype=float)
    c = np.clip((s * s + t * t - R * R) / (2 * s * t), -1.0, 1.0)
    out = np.arccos(c)
    out = np.where(t >= s + R, 0.0, out)
    if R > s:
        out = np.where(t <= R - s, math.pi, out)
    return out[()] if out.ndim == 0 else out


def _sin2_and_obtuse(s, R, t):
    # product form of 1 - cos^2 avoids cancellation at both support ends
    num = (R - t + s) * (R + t - s) * (s + t - R) * (s + t + R)
    sin2 = np.clip(num / (4 * s * s * t * t), 0.0, 1.0)
    cos2 = np.clip(((s * s + t * t - R * R) / (2 * s * t)) ** 2, 0.0, 1.0)
    return sin2, cos2, s * s + t * t < R * R


def _log_cap(n: int, s: float, R: float, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, -np.inf)
    if s == 0:
        out[(t >= 0) & (t < R)] = log_sphere_surface(n)
        return out
    full = t <= R - s
    out[full] = log_sphere_surface(n)
    part = (~full) & (t > abs(s - R)) & (t < s + R)
    if part.any():
        sin2, cos2, obtuse = _sin2_and_obtuse(s, R, t[part])
        out[part] = log_sphere_surface(n - 1) + log_sine_power_integral_sq(n - 2, sin2, obtuse, cos2)
    return out


def cap_measure(spec: BallSpec, t) -> LogMeasure:
    """Measure of {theta on the unit sphere : t theta in B(z, R)}."""
    return LogMeasure(float(_log_cap(spec.n, spec.s, spec.R, np.array([t]))[0]))


def log_kernel_phi(spec: BallSpec, t) -> np.ndarray:
    """log of phi_n(t) = n A_n(t) t^(n-1) / (omega_{n-1} R^n) on its support."""
    n, s, R = spec.n, spec.s, spec.R
    t = np.asarray(t, dtype=float)
    lo, hi = spec.support
    inside = (t >= lo) & (t <= hi) & (t > 0)
    out = np.full(t.shape, -np.inf)
    if inside.any():
        ti = t[inside]
        out[inside] = (math.log(n) - log_sphere_surface(n) - n * math.log(R)
                       + _log_cap(n, s, R, ti) + (n - 1) * np.log(ti))
    return out


def kernel_phi(spec: BallSpec, t):
    out = np.exp(log_kernel_phi(spec, np.atleast_1d(t)))
    return out[0] if np.ndim(t) == 0 else out


def radial_integral(density: RadialDensity, spec: BallSpec, a: float | None = None,
                    b: float | None = None, q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """log of int_a^b w0(t) A_n(t) t^(n-1) dt, clipped to the ball's support."""
    n, s, R = spec.n, spec.s, spec.R
    lo, hi = spec.support
    a = lo if a is None else max(a, lo)
    b = hi if b is None else min(b, hi)
    if b <= a:
        return -math.inf
    if not density.integrable_in(n) and a == 0.0:
        raise DivergenceError(
            f"{density.name} is not locally integrable in R^{n}", where=0.0)
    lw = density.log_eval

    def logf(t):
        return lw(t) + _log_cap(n, s, R, t) + (n - 1) * np.log(t)

    pts = [spec.T, abs(s - R)] + density.breakpoints(a, b)
    sing = [p for p in density.singular_points if a - 1e-12 * a <= p <= b + 1e-12 * b]
    graded = q.singularity_mode == "graded"
    res = log_integrate(logf, a, b, points=pts, singular=sing, rtol=q.rtol, max_rounds=q.max_rounds,
                        grade_ratio=0.25 if graded else 0.5,
                        min_rel_width=1e-15 if graded else 1e-3)
    if not math.isfinite(res.log_value) and res.log_value != -math.inf:
        raise DivergenceError("ball integral diverged", partial=res.log_value)
    return res.log_value


def ball_measure(density: RadialDensity, spec: BallSpec, q: QuadratureConfig = DEFAULT_QUAD) -> LogMeasure:
    """log mu(B(z, R)) for d mu = w0(|x|) dx."""
    return LogMeasure(radial_integral(density, spec, q=q))


def ball_average(density: RadialDensity, spec: BallSpec, q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Lebesgue average of w0(|x|) over B(z, R), i.e. int w0 phi_n dt."""
    lm = radial_integral(density, spec, q=q)
    return math.exp(lm - log_ball_volume(spec.n, spec.R))


def mc_ball_measure(density: RadialDensity, spec: BallSpec,
                    q: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Monte Carlo estimate of mu(B(z, R)) and its standard error (n <= 10 only).

    Points are drawn uniformly in the ball from a Gaussian direction and a
    radius R U^(1/n); the estimate is |B| times the sample mean of w0(|x|).
    """
    n = spec.n
    if n > 10:
        raise ValueError("Monte Carlo oracle is limited to n <= 10")
    rng = np.random.default_rng(q.seed)
    vol = math.exp(log_ball_volume(n, spec.R))
    total = 0.0
    total_sq = 0.0
    left = q.mc_samples
    while left > 0:
        m = min(left, 100_000)
        g = rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = spec.R * rng.random(m) ** (1.0 / n)
        x = g * r[:, None]
        x[:, 0] += spec.s
        vals = density(np.linalg.norm(x, axis=1))
        total += vals.sum()
        total_sq += (vals * vals).sum()
        left -= m
    N = q.mc_samples
    mean = total / N
    var = max(total_sq / N - mean * mean, 0.0)
    return vol * mean, vol * math.sqrt(var / (N - 1))


def lebesgue() -> RadialDensity:
    return constant(1.0)
