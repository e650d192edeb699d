"""The ten acceptance checks, shared by the test-suite and ``radmax verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import density as dens
from .dimension import LimitExperiment, approx_identity_certificate, limit_table, shell_counterexample, \
    power_family_experiment
from .geometry import BallSpec, ball_average, ball_measure, cap_angle, kernel_phi, log_kernel_phi, log_ball_volume, lebesgue
from .localization import (TimeSet, brute_max, certify_localization, discrete_constants, random_space,
                           run_selection, single_radius_l1, weak_doubling_at)
from .maximal import (Grid1D, LatticeGrid, RadialFunction, delta_lower_bound, grid_maximal_oracle,
                      hardy_operator, lattice_hardy, noncentered_max, radial_reduction_bound, weak_type_ratio)
from .special import log_sphere_surface
from .weights import SweepGrid, dyadic_oscillation, micro_doubling_constant, weak_doubling_constant


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float | None = None
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{flag}] {self.number:2d} {self.title} ({self.seconds:.1f}s) {extra}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _timed(number, title, budget, fn) -> CriterionResult:
    t0 = time.perf_counter()
    ok, details = fn()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        ok = False
        details["over_budget"] = True
    return CriterionResult(number, title, bool(ok), dt, budget, details)


# 1 ---------------------------------------------------------------------------

def lebesgue_exactness():
    one = lebesgue()
    worst = 0.0
    for n in (2, 10, 100, 1000):
        for R in (0.1, 1.0, 10.0):
            exact = log_sphere_surface(n) + n * math.log(R) - math.log(n)
            for s in (0.0, R / 2, R, 3 * R):
                lm = ball_measure(one, BallSpec(n, s, R)).log_value
                worst = max(worst, abs(math.expm1(lm - exact)))
    return worst < 1e-9, {"max_rel_error": worst}


# 2 ---------------------------------------------------------------------------

KERNEL_SPECS = [(n, s, R) for n in (2, 10, 100, 1000, 2000) for R in (0.1, 1.0, 10.0)
                for s in (0.0, R / 2, R, 3 * R)]


def kernel_certification(rtol: float = 1e-9):
    mass, neg, tail, mono, dbl = 0.0, 0.0, 0.0, True, 0.0
    for n, s, R in KERNEL_SPECS:
        spec = BallSpec(n, s, R)
        T = spec.T
        cert = approx_identity_certificate(spec, 0.1 * T)
        mass = max(mass, cert.mass_error)
        neg = min(neg, cert.positivity)
        if n == 2000:
            tail = max(tail, cert.tail)
        hi = s + R
        t = np.linspace(T, hi, 1000)
        phi = kernel_phi(spec, t)
        if np.any(np.diff(phi) > rtol * phi[:-1]):
            mono = False
        if s > 0:
            lo = max(s - R, 0.0)
            t = np.linspace(lo, hi, 1002)[1:-1]
            a = cap_angle(spec, t)
            keep = a < math.pi / 2
            t, a = t[keep], a[keep]
            # tilde phi = n/(n-1) (omega_{n-2}/omega_{n-1}) y^(n-1) / R^n, y = t sin(alpha)
            with np.errstate(divide="ignore"):
                log_tilde = (math.log(n / (n - 1)) + log_sphere_surface(n - 1) - log_sphere_surface(n)
                             + (n - 1) * np.log(t * np.sin(a)) - n * math.log(R))
                log_phi = log_kernel_phi(spec, t)
            ok = np.isfinite(log_tilde) & np.isfinite(log_phi)
            lower = np.max(log_tilde[ok] - log_phi[ok], initial=-np.inf)
            upper = np.max(log_phi[ok] - (log_tilde[ok] - np.log(np.cos(a[ok]))), initial=-np.inf)
            dbl = max(dbl, lower, upper)
    ok = mass < 1e-8 and neg >= 0 and tail < 1e-6 and mono and dbl <= rtol
    return ok, {"mass_error": mass, "min_phi": neg, "tail_2000": tail, "monotone": mono,
                "double_estimate_excess": dbl}


# 3 ---------------------------------------------------------------------------

def differentiation_limit():
    profiles = [dens.power(2.0),
                dens.from_function(lambda t: 1.0 / (1.0 + t * t), "1/(1+t^2)", is_decreasing=True),
                dens.exp_decay(1.0)]
    pairs = [(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)]
    ok, worst_final, identity = True, 0.0, 0.0
    for w in profiles:
        rep = limit_table(LimitExperiment(w, pairs, (10, 2000), 1e-2))
        for s, R in pairs:
            errs = [r[7] for r in rep.rows if r[1] == s and r[2] == R]
            ok &= errs[-1] < 1e-2 and errs[-1] < errs[0]
            worst_final = max(worst_final, errs[-1])
    for n in (2, 10, 100, 1000, 2000):
        for s, R in pairs + [(0.5, 2.0), (10.0, 0.1)]:
            exact = s * s + n * R * R / (n + 2)
            identity = max(identity, abs(ball_average(dens.power(2.0), BallSpec(n, s, R)) / exact - 1))
    ok &= identity < 1e-8
    return ok, {"worst_final_error": worst_final, "t2_identity_rel_error": identity}


# 4 ---------------------------------------------------------------------------

def dyadic_constants():
    worst = 0.0
    for a in (-0.5, 0.5, 1.0, 2.0):
        worst = max(worst, abs(dyadic_oscillation(dens.power(a)).value - 2 ** abs(a)))
    flat = dyadic_oscillation(dens.constant(1.0)).value
    return worst < 1e-6 and flat == 1.0, {"max_abs_error": worst, "constant_density": flat}


# 5 ---------------------------------------------------------------------------

SHELL_SCHEDULE = (50, 100, 200, 500, 1000, 2000)


def shell_growth():
    res = shell_counterexample(0.5, SHELL_SCHEDULE, top_half=False)
    g, lg = res.fit.exponent, res.lower_bound_fit.exponent
    ok = 0.4 <= g <= 0.6 and res.limit_error < 0.02 and 0.4 <= lg <= 0.6
    return ok, {"slope": g, "limit_error": res.limit_error, "lower_bound_slope": lg}


# 6 ---------------------------------------------------------------------------

DECOUPLING_GRID = SweepGrid(R_min=0.1, R_max=10.0, count=17, refine_depth=1, extra_radii=(1.0,))


def micro_weak_decoupling(grid: SweepGrid = DECOUPLING_GRID, dims=(10, 50, 200, 1000, 2000)):
    w = dens.shell(0.5)
    k0 = {n: micro_doubling_constant(w, n, grid).value for n in dims}
    k1 = {n: weak_doubling_constant(w, n, grid).value for n in (50, 2000)}
    bound = 1.2 * max(math.e, k0[10])
    growth = k1[2000] / k1[50]
    ok = all(v <= bound for v in k0.values()) and growth > (2000 / 50) ** 0.3
    return ok, {"max_K0": max(k0.values()), "K0_bound": bound, "K1_50": k1[50], "K1_2000": k1[2000],
                "K1_growth": growth, "growth_needed": (2000 / 50) ** 0.3}


# 7 ---------------------------------------------------------------------------

def one_dim_weak(instances: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_m, worst_h = 0.0, 0.0
    for _ in range(instances):
        N = int(rng.integers(4, 400))
        nodes = np.concatenate([[0.0], np.cumsum(rng.exponential(size=N))])
        g = Grid1D(nodes, rng.exponential(size=N) ** 2 * (rng.random(N) < 0.9))
        vals = rng.exponential(size=N) * (rng.random(N) < 0.3)
        F = RadialFunction(g, vals)
        if F.l1() == 0:
            vals[int(np.argmax(g.masses))] = 1.0
            F = RadialFunction(g, vals)
        worst_m = max(worst_m, weak_type_ratio(noncentered_max(F), F))
        worst_h = max(worst_h, weak_type_ratio(hardy_operator(F), F))
    ok = worst_m <= 2 + 1e-9 and worst_h <= 1 + 1e-9
    return ok, {"weak_const_max": worst_m, "hardy_weak_max": worst_h}


# 8 ---------------------------------------------------------------------------

def radial_reduction(seed: int = 0):
    lat = LatticeGrid(2, 20, 0.1)
    r = lat.norms()
    nodes = np.linspace(0.0, 3.0, 601)
    kgrid = SweepGrid(R_min=0.05, R_max=5.0, count=17, refine_depth=2)
    rng = np.random.default_rng(seed)
    worst = {}
    for w in (dens.constant(1.0), dens.power(0.5)):
        K1 = weak_doubling_constant(w, 2, kgrid).value
        g = Grid1D.for_density(w, 2, nodes)
        fs, envs = [], []
        for _ in range(50):
            cuts = np.sort(rng.uniform(0.0, 1.8, int(rng.integers(1, 6))))
            vals = rng.exponential(size=cuts.size + 1)
            vals[-1] = 0.0
            fs.append(vals[np.searchsorted(cuts, r)])
            env = radial_reduction_bound(RadialFunction(g, vals[np.searchsorted(cuts, g.centers)]), K1)
            envs.append(env.at(r))
        M = grid_maximal_oracle(np.array(fs), w, lat)
        worst[w.name] = float(np.max(M / np.array(envs)))
    # pointwise decomposition for non-radial inputs, w0 = t^(1/2)
    w = dens.power(0.5)
    beta = dyadic_oscillation(w).value
    wx = w(r)
    f = rng.exponential(size=(20, r.size)) * (rng.random((20, r.size)) < 0.2) * (r < 1.5)
    Mmu = grid_maximal_oracle(f, w, lat)
    rhs = grid_maximal_oracle(f, None, lat) + grid_maximal_oracle(f * wx, None, lat) / np.where(wx > 0, wx, 1.0) \
        + lattice_hardy(f, w, lat)
    # where M f = 0 the bound is trivial; rhs = 0 with M f > 0 still gives inf
    live = (wx > 0)[None, :] & (Mmu > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        decomp = float(np.max(np.where(live, Mmu / (4 * beta ** 4 * rhs), 0.0)))
    ok = all(v <= 1.0 for v in worst.values()) and decomp <= 1.0
    return ok, {**{f"reduction_{k}": v for k, v in worst.items()}, "decomposition": decomp}


# 9 ---------------------------------------------------------------------------

def localization_suite(instances: int = 100, seed: int = 2024):
    rng = np.random.default_rng(seed)
    failures, runs, equality, worst_norm = [], 0, 0, 0.0
    for i in range(instances):
        P = int(rng.integers(2, 61))
        space = random_space(rng, P, int(rng.integers(1, 4)))
        n = float(rng.choice([1.5, 2.0, 3.0]))
        T = TimeSet(np.unique(np.exp(rng.uniform(math.log(0.05), math.log(6.0), int(rng.integers(1, 9))))), n)
        f = rng.exponential(size=P) * (rng.random(P) < 0.4)
        K0 = discrete_constants(space, n).K0
        for r in T.radii:
            norm, _ = single_radius_l1(space, r)
            k1 = weak_doubling_at(space, r)
            worst_norm = max(worst_norm, norm / k1)
            if norm > k1 * (1 + 1e-12):
                failures.append((i, "single_radius", r))
            elif abs(norm - k1) <= 1e-12 * k1:
                equality += 1
        Mf = brute_max(space, T, f)
        for q in (0.3, 0.6, 0.9):
            lam = float(np.quantile(Mf, q))
            if lam <= 0:
                continue
            state = run_selection(space, T, f, lam, n, K0)
            cert = certify_localization(state, space, T, f)
            runs += 1
            if not cert.passed:
                failures.append((i, cert.violations))
    ok = not failures and equality > 0
    return ok, {"certified_runs": runs, "failures": len(failures), "equality_witnesses": equality,
                "max_norm_over_K1": worst_norm}


# 10 --------------------------------------------------------------------------

def power_family_growth():
    fit, _ = power_family_experiment(0.7, tuple(range(10, 121, 10)))
    return fit.exponent > 0 and fit.r2 >= 0.98, {"log_slope_per_dim": fit.exponent, "r2": fit.r2}


CRITERIA: list[tuple[int, str, float | None, Callable]] = [
    (1, "Lebesgue exactness", 10.0, lebesgue_exactness),
    (2, "kernel certification", 30.0, kernel_certification),
    (3, "differentiation through dimensions", None, differentiation_limit),
    (4, "dyadic constants", None, dyadic_constants),
    (5, "shell growth n^alpha", 120.0, shell_growth),
    (6, "micro vs weak doubling decoupling", None, micro_weak_decoupling),
    (7, "1-D weak (1,1) constants", None, one_dim_weak),
    (8, "radial reduction and decomposition", None, radial_reduction),
    (9, "localization certificates", 120.0, localization_suite),
    (10, "power family growth", None, power_family_growth),
]


def run_criterion(number: int) -> CriterionResult:
    for num, title, budget, fn in CRITERIA:
        if num == number:
            return _timed(num, title, budget, fn)
    raise KeyError(number)


def run_all(numbers=None, echo=print) -> list[CriterionResult]:
    out = []
    for num, title, budget, fn in CRITERIA:
        if numbers and num not in numbers:
            continue
        res = _timed(num, title, budget, fn)
        if echo:
            echo(res.line())
        out.append(res)
    return out
