"""Numerical lower bounds for the structural constants of radial weights.

Every constant here is a supremum over balls.  We evaluate the defining
ratio on a log-spaced radius grid times a list of center multipliers s/R,
then polish the best grid cell with a golden-section search in log R.  The
result is therefore a certified lower bound of the true supremum, never an
upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import RadialDensity
from .geometry import (DEFAULT_QUAD, BallSpec, QuadratureConfig, log_ball_volume,
                       radial_integral)
from .parallel import pmap
from .quadrature import DivergenceError

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SweepGrid:
    R_min: float = 1e-2
    R_max: float = 1e2
    count: int = 64
    s_over_R: tuple[float, ...] = tuple(0.25 * k for k in range(17))
    refine_depth: int = 3
    dimensions: tuple[int, ...] = (10, 50, 200, 1000, 2000)
    extra_radii: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 < self.R_min < self.R_max:
            raise ValueError("need 0 < R_min < R_max")
        if self.count < 8:
            raise ValueError("radius grid needs at least 8 points")
        if any(m < 0 for m in self.s_over_R):
            raise ValueError("center multipliers must be >= 0")
        if self.refine_depth < 0:
            raise ValueError("refine_depth must be >= 0")

    def radii(self) -> np.ndarray:
        r = np.geomspace(self.R_min, self.R_max, self.count)
        return np.unique(np.concatenate([r, np.asarray(self.extra_radii, dtype=float)]))

    def scaled(self, c: float) -> "SweepGrid":
        return SweepGrid(self.R_min * c, self.R_max * c, self.count, self.s_over_R,
                         self.refine_depth, self.dimensions,
                         tuple(c * r for r in self.extra_radii))

    def describe(self) -> dict:
        return {"R_min": self.R_min, "R_max": self.R_max, "count": self.count,
                "s_over_R": list(self.s_over_R), "refine_depth": self.refine_depth,
                "extra_radii": list(self.extra_radii)}


@dataclass
class ConstantEstimate:
    """Best ratio found and the parameters that produced it."""

    name: str
    value: float
    witness: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    certified_direction: str = "lower bound of a supremum"

    def __float__(self):
        return self.value


class BallTable:
    """Memoized log mu(B(z, R)) for one density and dimension."""

    def __init__(self, density: RadialDensity, n: int, q: QuadratureConfig = DEFAULT_QUAD):
        self.density = density
        self.n = n
        self.q = q
        self._memo: dict[tuple[float, float], float] = {}

    def log_mu(self, s: float, R: float) -> float:
        key = (float(s), float(R))
        if key not in self._memo:
            try:
                self._memo[key] = radial_integral(self.density, BallSpec(self.n, s, R), q=self.q)
            except DivergenceError:
                self._memo[key] = math.inf
        return self._memo[key]

    def log_avg(self, s: float, R: float) -> float:
        return self.log_mu(s, R) - log_ball_volume(self.n, R)

    def fill(self, pairs):
        todo = [p for p in dict.fromkeys((float(s), float(R)) for s, R in pairs) if p not in self._memo]
        vals = pmap(lambda p: self._safe(p), todo)
        self._memo.update(zip(todo, vals))

    def _safe(self, p):
        try:
            return radial_integral(self.density, BallSpec(self.n, p[0], p[1]), q=self.q)
        except DivergenceError:
            return math.inf


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int):
    """Maximize f on [lo, hi] by golden-section search; returns (best_x, best_f)."""
    a, b = lo, hi
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
            best = max(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
            best = max(best, (fd, d))
    return best[1], best[0]


def _sweep(radii: np.ndarray, log_ratio: Callable[[float], float], depth: int):
    """Max of log_ratio over radii, then golden-section polish in log R."""
    vals = np.array([log_ratio(R) for R in radii])
    finite = np.where(np.isnan(vals), -np.inf, vals)
    i = int(np.argmax(finite))
    best_R, best = float(radii[i]), float(finite[i])
    if depth > 0 and len(radii) > 1 and math.isfinite(best):
        lo = math.log(radii[max(i - 1, 0)])
        hi = math.log(radii[min(i + 1, len(radii) - 1)])
        if hi > lo:
            def g(u):
                v = log_ratio(math.exp(u))
                return v if not math.isnan(v) else -math.inf
            u, v = _golden_max(g, lo, hi, 6 * depth)
            if v > best:
                best, best_R = v, math.exp(u)
    return best_R, best


def _annulus_mesh(density: RadialDensity, R: float, depth: int, points: int = 257) -> np.ndarray:
    t = np.geomspace(R, 2 * R, points)
    extra = []
    for p in density.singular_points + tuple(density.breakpoints(R, 2 * R)):
        if R <= p <= 2 * R:
            offs = R * 4.0 ** -np.arange(1, 8 * depth + 4)
            offs = offs[offs > 1e4 * np.finfo(float).eps * p]
            extra.append(p - offs)
            extra.append(p + offs)
    if extra:
        t = np.concatenate([t] + extra)
        t = t[(t >= R) & (t <= 2 * R)]
    return np.unique(t)


def dyadic_oscillation(density: RadialDensity, grid: SweepGrid = SweepGrid()) -> ConstantEstimate:
    """sup/inf of w0 over annuli [R, 2R], maximized over R."""
    depth = grid.refine_depth

    def log_osc(R):
        lw = density.log_eval(_annulus_mesh(density, R, depth))
        hi, lo = float(np.max(lw)), float(np.min(lw))
        if lo == -math.inf or hi == math.inf:
            return math.inf
        return hi - lo

    R, v = _sweep(grid.radii(), log_osc, depth)
    return ConstantEstimate("beta", math.exp(v) if v < 709 else math.inf,
                            {"R": R, "annulus": [R, 2 * R]}, grid.describe())


def _pairs_max(table: BallTable, grid: SweepGrid, num: Callable, den: Callable, admissible: Callable,
               name: str) -> ConstantEstimate:
    """Max over R and multiplier pairs (m1, m2) of exp(num(m1, R) - den(m2, R))."""
    mults = grid.s_over_R
    pairs = [(a, b) for a in mults for b in mults if admissible(a, b)]
    radii = grid.radii()

    best = (-math.inf, None, None)
    for R in radii:
        for a, b in pairs:
            v = num(a, R) - den(b, R)
            if math.isnan(v):
                v = math.inf
            if v > best[0]:
                best = (v, (a, b), R)
    v, pair, R = best
    if pair is not None and math.isfinite(v) and grid.refine_depth > 0:
        a, b = pair
        R, v = _sweep(np.array([R * 0.5 ** (1 / 8), R, R * 2 ** (1 / 8)])
                      if len(radii) < 2 else _neighbours(radii, R),
                      lambda r: num(a, r) - den(b, r), grid.refine_depth)
    value = math.exp(v) if v < 709 else math.inf
    witness = {"n": table.n, "R": R}
    if pair is not None:
        witness.update({"s1": pair[0] * R, "s2": pair[1] * R,
                        "s1_over_R": pair[0], "s2_over_R": pair[1]})
    return ConstantEstimate(name, value, witness, grid.describe())


def _neighbours(radii: np.ndarray, R: float) -> np.ndarray:
    i = int(np.argmin(np.abs(radii - R)))
    return radii[max(i - 1, 0): i + 2]


def _prefill(table: BallTable, grid: SweepGrid, dilations=(1.0,)):
    table.fill((m * R, R * c) for R in grid.radii() for m in grid.s_over_R for c in dilations)


def micro_doubling_constant(density: RadialDensity, n: int, grid: SweepGrid = SweepGrid(),
                            q: QuadratureConfig = DEFAULT_QUAD, table: BallTable | None = None) -> ConstantEstimate:
    """mu(B(z, (1 + 1/n) R)) / mu(B(z, R)), same center."""
    table = table or BallTable(density, n, q)
    c = 1.0 + 1.0 / n
    _prefill(table, grid, (1.0, c))
    return _pairs_max(table, grid,
                      lambda m, R: table.log_mu(m * R, c * R),
                      lambda m, R: table.log_mu(m * R, R),
                      lambda a, b: a == b, "K0")


def weak_doubling_constant(density: RadialDensity, n: int, grid: SweepGrid = SweepGrid(),
                           q: QuadratureConfig = DEFAULT_QUAD, table: BallTable | None = None) -> ConstantEstimate:
    """mu(B(z1, R)) / mu(B(z2, R)) over centers with |s1 - s2| < 2R.

    Two centers at distances s1, s2 from the origin can be placed within 2R
    of each other exactly when |s1 - s2| < 2R, which is when the balls meet.
    """
    table = table or BallTable(density, n, q)
    _prefill(table, grid)
    return _pairs_max(table, grid,
                      lambda m, R: table.log_mu(m * R, R),
                      lambda m, R: table.log_mu(m * R, R),
                      lambda a, b: abs(a - b) < 2.0, "K1")


def strong_micro_constant(density: RadialDensity, n: int, grid: SweepGrid = SweepGrid(),
                          q: QuadratureConfig = DEFAULT_QUAD, table: BallTable | None = None) -> ConstantEstimate:
    """mu(B(y, (1 + 1/n) R)) / mu(B(x, R)) with y in B(x, R), i.e. |s_y - s_x| < R.

    In the witness, s1 is the center of the dilated ball and s2 the other one.
    """
    table = table or BallTable(density, n, q)
    c = 1.0 + 1.0 / n
    _prefill(table, grid, (1.0, c))
    return _pairs_max(table, grid,
                      lambda m, R: table.log_mu(m * R, c * R),
                      lambda m, R: table.log_mu(m * R, R),
                      lambda a, b: abs(a - b) < 1.0, "K")


def ap_constant(density: RadialDensity, n: int, p: float, grid: SweepGrid = SweepGrid(),
                q: QuadratureConfig = DEFAULT_QUAD) -> ConstantEstimate:
    """avg(w) avg(w^(1/(1-p)))^(p-1) maximized over balls."""
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    dual = density.power(1.0 / (1.0 - p))
    tw = BallTable(density, n, q)
    td = BallTable(dual, n, q)
    _prefill(tw, grid)
    _prefill(td, grid)
    for R in grid.radii():
        for m in grid.s_over_R:
            if math.isinf(tw.log_mu(m * R, R)) or math.isinf(td.log_mu(m * R, R)):
                which = "weight" if math.isinf(tw.log_mu(m * R, R)) else "dual weight"
                return ConstantEstimate(f"A_{p:g}", math.inf,
                                        {"n": n, "R": float(R), "s": float(m * R), "divergent": which},
                                        grid.describe())
    return _pairs_max(tw, grid,
                      lambda m, R: tw.log_avg(m * R, R) + (p - 1) * td.log_avg(m * R, R),
                      lambda m, R: 0.0,
                      lambda a, b: a == b, f"A_{p:g}")


def _log_inf_on(density: RadialDensity, a: float, b: float, depth: int) -> float:
    t = np.concatenate([np.linspace(a, b, 513), [a, b]])
    if a > 0:
        t = np.concatenate([t, np.geomspace(a, b, 257)])
    lw = density.log_eval(t)
    return float(np.min(lw))


def a1_constant(density: RadialDensity, n: int, grid: SweepGrid = SweepGrid(),
                q: QuadratureConfig = DEFAULT_QUAD) -> ConstantEstimate:
    """avg over B(z, R) of w divided by the infimum of w0 on [(s-R)_+, s+R]."""
    table = BallTable(density, n, q)
    _prefill(table, grid)
    depth = grid.refine_depth
    for R in grid.radii():
        for m in grid.s_over_R:
            if _log_inf_on(density, max(m * R - R, 0.0), m * R + R, depth) == -math.inf:
                return ConstantEstimate("A_1", math.inf,
                                        {"n": n, "R": float(R), "s": float(m * R), "reason": "inf w0 = 0"},
                                        grid.describe())
    return _pairs_max(table, grid,
                      lambda m, R: table.log_avg(m * R, R),
                      lambda m, R: _log_inf_on(density, max(m * R - R, 0.0), m * R + R, depth),
                      lambda a, b: a == b, "A_1")


@dataclass
class HardyCheck:
    ratio: float
    witness_R: float
    beta: float
    n_required: int
    holds: bool | None


def hardy_upper_check(density: RadialDensity, n: int, grid: SweepGrid = SweepGrid(),
                      q: QuadratureConfig = DEFAULT_QUAD, beta: float | None = None) -> HardyCheck:
    """Worst mu(B_R) / (w0(R) |B_R|) over the grid, against the bound 2 beta.

    The bound is only claimed once 2^n >= 2 beta; below that ``holds`` is None.
    """
    if beta is None:
        beta = dyadic_oscillation(density, grid).value
    if not math.isfinite(beta):
        raise ValueError("Hardy control needs a finite dyadic constant")
    table = BallTable(density, n, q)
    radii = grid.radii()
    table.fill((0.0, R) for R in radii)

    def log_ratio(R):
        return table.log_avg(0.0, R) - float(density.log_eval(np.array([R]))[0])

    R, v = _sweep(radii, log_ratio, grid.refine_depth)
    ratio = math.exp(v)
    n_req = max(1, math.ceil(math.log2(2 * beta)))
    holds = (ratio <= 2 * beta * (1 + 1e-9)) if n >= n_req else None
    return HardyCheck(ratio, R, beta, n_req, holds)


@dataclass
class Comparability:
    q: float
    witness: tuple[float, float]
    diverged: bool
    history: list[float]


def decreasing_comparability(density: RadialDensity, tol: float = 0.05, levels: int = 4) -> Comparability:
    """Smallest q with w0(t) <= q w0(s) for mesh points s <= t.

    The mesh is refined toward 0 and toward singular points level by level;
    q is reported as diverging when it keeps growing by more than ``tol``
    relative over the last two refinements.
    """
    history = []
    best = (1.0, (math.nan, math.nan))
    for lev in range(levels + 1):
        lo = 10.0 ** (-4 - 2 * lev)
        t = [np.geomspace(lo, 1e2, 400 * (lev + 1))]
        for p in density.singular_points:
            if p > 0:
                offs = 10.0 ** -np.arange(1, 3 + 2 * lev, 0.5)
                t += [p - offs, p + offs]
        t = np.unique(np.concatenate(t))
        t = t[t > 0]
        lw = density.log_eval(t)
        lw = np.where(np.isnan(lw), -np.inf, lw)
        run_min = np.minimum.accumulate(lw)
        arg_min = np.zeros(t.size, dtype=int)
        cur = 0
        for i in range(t.size):
            if lw[i] < lw[cur]:
                cur = i
            arg_min[i] = cur
        with np.errstate(invalid="ignore"):
            gap = lw - run_min
        gap = np.where(np.isnan(gap), np.inf, gap)
        j = int(np.argmax(gap))
        qv = math.exp(min(gap[j], 709.0))
        history.append(qv)
        best = (qv, (float(t[arg_min[j]]), float(t[j])))
    grows = len(history) >= 3 and all(history[k + 1] > history[k] * (1 + tol) for k in (-3, -2))
    return Comparability(best[0], best[1], grows or math.isinf(best[0]), history)
