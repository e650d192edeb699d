"""Ball averages as the dimension grows, and the growth experiments built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .density import RadialDensity, power_family, shell
from .geometry import (DEFAULT_QUAD, BallSpec, QuadratureConfig, ball_average, kernel_phi,
                       log_ball_volume, radial_integral)
from .maximal import delta_lower_bound
from .parallel import pmap
from .report import ExperimentReport

DEFAULT_SCHEDULE = (10, 40, 160, 640, 2000)


def geometric_schedule(start: int = 10, ratio: int = 4, cap: int = 2000) -> tuple[int, ...]:
    out = []
    n = start
    while n < cap:
        out.append(n)
        n *= ratio
    out.append(cap)
    return tuple(out)


@dataclass
class Certificate:
    positivity: float
    mass_error: float
    tail_below: float
    tail_above: float

    @property
    def tail(self) -> float:
        return self.tail_below + self.tail_above


def approx_identity_certificate(spec: BallSpec, eps: float, mesh: int = 1000,
                                q: QuadratureConfig = DEFAULT_QUAD) -> Certificate:
    """Minimum of phi_n on a mesh, |int phi_n - 1|, and the mass outside (T-eps, T+eps)."""
    T = spec.T
    if not 0 < eps < T:
        raise ValueError("need 0 < eps < T")
    lo, hi = spec.support
    t = np.linspace(lo, hi, mesh)
    pos = float(np.min(kernel_phi(spec, t)))
    one = RadialDensity(lambda x: np.zeros_like(np.asarray(x, dtype=float)), "1", True, 0.0)
    logvol = log_ball_volume(spec.n, spec.R)
    mass = math.exp(radial_integral(one, spec, q=q) - logvol)

    def part(a, b):
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        return math.exp(radial_integral(one, spec, a, b, q=q) - logvol)

    return Certificate(pos, abs(mass - 1.0), part(lo, T - eps), part(T + eps, hi))


@dataclass
class LimitExperiment:
    density: RadialDensity
    pairs: list = field(default_factory=lambda: [(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)])
    schedule: tuple = DEFAULT_SCHEDULE
    tolerance: float = 1e-2

    def __post_init__(self):
        for s, R in self.pairs:
            T = math.hypot(s, R)
            for p in self.density.singular_points:
                if abs(T - p) < 1e-12:
                    raise ValueError(f"T={T} sits on a singular point of {self.density.name}")

    def target(self, s, R) -> float:
        return float(self.density(math.hypot(s, R)))


def limit_table(exp: LimitExperiment, q: QuadratureConfig = DEFAULT_QUAD) -> ExperimentReport:
    rep = ExperimentReport("limit", ["density", "s", "R", "T", "n", "average", "target", "error"],
                           parameters={"density": exp.density.name, "pairs": exp.pairs,
                                       "schedule": list(exp.schedule), "tolerance": exp.tolerance},
                           provenance={"rtol": q.rtol})
    cells = [(s, R, n) for s, R in exp.pairs for n in exp.schedule]
    avgs = pmap(lambda c: ball_average(exp.density, BallSpec(c[2], c[0], c[1]), q), cells)
    ok = True
    for (s, R, n), a in zip(cells, avgs):
        tgt = exp.target(s, R)
        rep.add(exp.density.name, s, R, math.hypot(s, R), n, a, tgt, abs(a - tgt))
    for s, R in exp.pairs:
        errs = [r[7] for r in rep.rows if r[1] == s and r[2] == R]
        # errors at round-off level need not decrease
        floor = 1e-12 * max(1.0, abs(exp.target(s, R)))
        ok &= errs[-1] <= exp.tolerance and (errs[-1] < errs[0] or errs[-1] <= floor)
    rep.passed = bool(ok)
    return rep


@dataclass
class GrowthFit:
    dims: np.ndarray
    values: np.ndarray
    model: str
    exponent: float
    stderr: float
    r2: float
    intercept: float

    @property
    def confident(self) -> bool:
        return self.r2 >= 0.98

    @property
    def rate(self) -> float:
        """n^gamma models: gamma.  a^n models: a."""
        return self.exponent if self.model == "power" else math.exp(self.exponent)

    def band(self, z: float = 1.96) -> tuple[float, float]:
        return self.exponent - z * self.stderr, self.exponent + z * self.stderr


def fit_growth(dims, values, model: str = "power", top_half: bool = True) -> GrowthFit:
    """Least squares on log values against log n (power) or n (exponential)."""
    dims = np.asarray(dims, dtype=float)
    values = np.asarray(values, dtype=float)
    if model not in ("power", "exponential"):
        raise ValueError(model)
    if top_half and dims.size >= 4:
        keep = dims >= np.median(dims)
        dims, values = dims[keep], values[keep]
    x = np.log(dims) if model == "power" else dims
    res = stats.linregress(x, np.log(values))
    return GrowthFit(dims, values, model, float(res.slope), float(res.stderr),
                     float(res.rvalue ** 2), float(res.intercept))


def shell_ball_ratio_exact(n: int, alpha: float) -> float:
    """mu(B_1)/|B_1| for the shell density: n B(n, 1 - alpha)."""
    return math.exp(math.log(n) + gammaln(n) + gammaln(1 - alpha) - gammaln(n + 1 - alpha))


@dataclass
class ShellResult:
    fit: GrowthFit
    limit_value: float
    limit_target: float
    lower_bound_fit: GrowthFit
    report: ExperimentReport

    @property
    def limit_error(self) -> float:
        return abs(self.limit_value - self.limit_target)


def shell_counterexample(alpha: float, schedule=DEFAULT_SCHEDULE, top_half: bool = True,
                         q: QuadratureConfig = DEFAULT_QUAD) -> ShellResult:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    w = shell(alpha)
    rep = ExperimentReport("counterexample", ["n", "center_avg", "center_avg_exact", "offset_avg",
                                              "lower_bound", "lower_bound_s"],
                           parameters={"alpha": alpha, "schedule": list(schedule)},
                           provenance={"rtol": q.rtol})

    def cell(n):
        c = ball_average(w, BallSpec(n, 0.0, 1.0), q)
        o = ball_average(w, BallSpec(n, 1.0, 1.0), q)
        lb = delta_lower_bound(w, n, q=q)
        return c, o, lb

    out = pmap(cell, list(schedule))
    for n, (c, o, lb) in zip(schedule, out):
        rep.add(n, c, shell_ball_ratio_exact(n, alpha), o, lb.value, lb.witness["s"])
    fit = fit_growth(schedule, rep.column("center_avg"), "power", top_half)
    lfit = fit_growth(schedule, rep.column("lower_bound"), "power", top_half)
    target = (math.sqrt(2) - 1) ** (-alpha)
    res = ShellResult(fit, rep.column("offset_avg")[-1], target, lfit, rep)
    rep.passed = bool(fit.confident)
    return res


def power_family_experiment(alpha: float, schedule=tuple(range(10, 121, 10)),
                            q: QuadratureConfig = DEFAULT_QUAD) -> tuple[GrowthFit, ExperimentReport]:
    """Point-mass lower bound for w0 = t^(-alpha n) against n, fitted as a^n."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rep = ExperimentReport("power-family", ["n", "lower_bound", "log_lower_bound", "heuristic"],
                           parameters={"alpha": alpha, "schedule": list(schedule)},
                           provenance={"rtol": q.rtol})
    # homogeneous: the ratio does not depend on the level radius
    radii = np.array([0.5, 1.0, 2.0])
    out = pmap(lambda n: delta_lower_bound(power_family(alpha, n), n, radii, q), list(schedule))
    for n, lb in zip(schedule, out):
        rep.add(n, lb.value, lb.log_value, lb.heuristic)
    fit = fit_growth(schedule, np.exp(rep.column("log_lower_bound")), "exponential", top_half=False)
    rep.passed = bool(fit.confident and fit.exponent > 0)
    return fit, rep
