"""Radial density profiles w0 on (0, inf), evaluated in log space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np


def _floor_for(gamma: float) -> int:
    """Smallest N >= 1 with gamma > -N."""
    return max(1, math.floor(-gamma) + 1)


@dataclass(frozen=True)
class RadialDensity:
    """A radial profile w0 with the structural data the integrators need.

    ``log_profile`` is vectorized and must return -inf exactly where w0 = 0.
    ``singular_points`` and ``jumps`` become quadrature breakpoints.
    ``jumps`` may also be a callable ``(a, b) -> points`` for profiles with
    infinitely many discontinuities.
    """

    log_profile: Callable[[np.ndarray], np.ndarray]
    name: str = "w0"
    is_decreasing: bool = False
    homogeneity: float | None = None
    integrability_floor: int = 1
    singular_points: tuple[float, ...] = ()
    jumps: tuple[float, ...] | Callable[[float, float], Sequence[float]] = field(default=())

    def __post_init__(self):
        if self.integrability_floor < 1:
            raise ValueError("integrability_floor must be >= 1")
        if self.homogeneity is not None and not self.homogeneity > -self.integrability_floor:
            raise ValueError(
                f"homogeneity {self.homogeneity} is not integrable against t^(N-1) "
                f"for N = {self.integrability_floor}"
            )

    def log_eval(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.log_profile(t), dtype=float)

    def __call__(self, t):
        return np.exp(self.log_eval(t))

    def breakpoints(self, a: float, b: float) -> list[float]:
        pts = [p for p in self.singular_points if a < p < b]
        if callable(self.jumps):
            pts += [p for p in self.jumps(a, b) if a < p < b]
        else:
            pts += [p for p in self.jumps if a < p < b]
        return sorted(set(pts))

    def integrable_in(self, n: int) -> bool:
        if self.homogeneity is not None:
            return self.homogeneity > -n
        return n >= self.integrability_floor

    def power(self, p: float) -> "RadialDensity":
        """The profile w0 ** p (used for the A_p dual weight)."""
        lp = self.log_profile
        gamma = None if self.homogeneity is None else self.homogeneity * p
        sing = tuple(self.singular_points)
        if gamma is not None and gamma < 0 and 0.0 not in sing:
            sing = (0.0,) + sing
        return RadialDensity(
            log_profile=lambda t: p * lp(t),
            name=f"({self.name})^{p:g}",
            is_decreasing=self.is_decreasing if p > 0 else False,
            homogeneity=gamma,
            integrability_floor=_floor_for(gamma) if gamma is not None else self.integrability_floor,
            singular_points=sing,
            jumps=self.jumps,
        )

    def renamed(self, name: str) -> "RadialDensity":
        return replace(self, name=name)


def constant(c: float = 1.0) -> RadialDensity:
    if c <= 0:
        raise ValueError("constant density must be positive")
    lc = math.log(c)
    return RadialDensity(lambda t: np.full(np.shape(t), lc), name=f"{c:g}",
                         is_decreasing=True, homogeneity=0.0)


def power(alpha: float) -> RadialDensity:
    """w0(t) = t^alpha."""
    return RadialDensity(
        lambda t: alpha * np.log(t),
        name=f"power({alpha:g})",
        is_decreasing=alpha <= 0,
        homogeneity=float(alpha),
        integrability_floor=_floor_for(alpha),
        singular_points=(0.0,) if alpha < 0 else (),
    )


def shell(alpha: float) -> RadialDensity:
    """w0(t) = |1 - t|^(-alpha), singular on the unit sphere."""
    if not 0 < alpha < 1:
        raise ValueError("shell density needs alpha in (0, 1)")
    return RadialDensity(
        lambda t: -alpha * np.log(np.abs(1.0 - t)),
        name=f"shell({alpha:g})",
        singular_points=(1.0,),
    )


def power_family(alpha: float, n: int) -> RadialDensity:
    """w0(t) = t^(-alpha n); the exponent changes with the dimension."""
    if not 0 < alpha < 1:
        raise ValueError("power family needs alpha in (0, 1)")
    d = power(-alpha * n)
    return d.renamed(f"power_family({alpha:g})[n={n}]")


def exp_decay(rate: float = 1.0) -> RadialDensity:
    return RadialDensity(lambda t: -rate * t, name=f"exp(-{rate:g}t)", is_decreasing=True)


def dyadic_steps(beta: float) -> RadialDensity:
    """Decreasing step profile beta^(-k) on [2^k, 2^(k+1)); oscillation beta on every annulus [R, 2R]."""
    lb = math.log(beta)

    def logp(t):
        return -lb * np.floor(np.log2(t))

    def jumps(a, b):
        # steps far below b carry negligible mass for the dimensions we use
        lo = math.floor(math.log2(max(a, b * 2.0 ** -60)))
        hi = math.ceil(math.log2(b))
        return [2.0 ** k for k in range(lo, hi + 1)]

    gamma = -math.log2(beta)
    return RadialDensity(logp, name=f"dyadic_steps({beta:g})", is_decreasing=True,
                         integrability_floor=_floor_for(gamma),
                         singular_points=(0.0,), jumps=jumps)


def from_function(fn: Callable[[np.ndarray], np.ndarray], name: str = "w0", **flags) -> RadialDensity:
    """Wrap a plain (non-log) profile."""
    return RadialDensity(lambda t: np.log(np.asarray(fn(t), dtype=float)), name=name, **flags)
