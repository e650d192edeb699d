"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 certificate failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dimension import LimitExperiment, geometric_schedule, limit_table, power_family_experiment, \
    shell_counterexample
from .expr import DensitySyntaxError, density_from_text
from .geometry import BallSpec, QuadratureConfig, ball_average, ball_measure, log_ball_volume, mc_ball_measure
from .localization import (FiniteMetricMeasureSpace, TimeSet, brute_max, certify_localization,
                           discrete_constants, random_space, run_selection, scaling_probe,
                           single_radius_l1, weak_norm_probe)
from .maximal import Grid1D, RadialFunction, hardy_operator, noncentered_max, weak_type_ratio
from .quadrature import DivergenceError
from .report import ExperimentReport
from .weights import (SweepGrid, a1_constant, ap_constant, dyadic_oscillation, micro_doubling_constant,
                      strong_micro_constant, weak_doubling_constant)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_CERTIFICATE = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _pairs(text) -> list[tuple[float, float]]:
    if isinstance(text, (list, tuple)):
        return [tuple(map(float, p)) for p in text]
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            s, R = chunk.split(",")
            out.append((float(s), float(R)))
    return out


# defaults live here, not in argparse, so config files can fill the gaps
DEFAULTS = {
    "out": "reports", "stamp": None, "seed": 0, "rtol": 1e-9,
    "density": "1", "n": 10, "s": 0.0, "R": 1.0, "mc": False,
    "dims": None, "p": 2.0, "r_min": 1e-2, "r_max": 1e2, "r_count": 64,
    "depth": 3, "only": None,
    "pairs": "0,1;1,1;3,1", "tolerance": 1e-2,
    "alpha": 0.5, "n_max": 2000,
    "f": "1", "support": 1.0, "nodes": 4096,
    "space": None, "points": 30, "radii": "0.25,0.5,1,2", "micro_n": 2.0, "quantile": 0.5,
    "trials": 0, "scaling_dims": None,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radmax", description="Ball measures, maximal operators and "
                                 "doubling constants for radial measures in high dimension.")
    ap.add_argument("--version", action="version", version=f"radmax {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with default values for any flag")
    common.add_argument("--out", help="report directory (default: reports)")
    common.add_argument("--stamp", help="override the timestamp in report file names")
    common.add_argument("--seed", type=int)
    common.add_argument("--rtol", type=float, help="quadrature relative tolerance")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ball-measure", parents=[common], help="measure of one ball")
    p.add_argument("--density")
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--mc", action="store_true", default=None, help="also run the Monte Carlo oracle")

    p = sub.add_parser("constants", parents=[common], help="beta, K0, K1, K, A_p, A_1 against n")
    p.add_argument("--density")
    p.add_argument("--dims")
    p.add_argument("--p", type=float)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--r-count", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--only", help="comma list from beta,K0,K1,K,Ap,A1")

    p = sub.add_parser("limit", parents=[common], help="ball averages as n grows")
    p.add_argument("--density")
    p.add_argument("--pairs", help="'s,R;s,R;...'")
    p.add_argument("--dims")
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("counterexample", parents=[common], help="shell density growth")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--dims")

    p = sub.add_parser("power-family", parents=[common], help="t^(-alpha n) point-mass bound")
    p.add_argument("--alpha", type=float)
    p.add_argument("--dims")

    p = sub.add_parser("maximal", parents=[common], help="1-D maximal operators of a radial profile")
    p.add_argument("--density")
    p.add_argument("--n", type=int)
    p.add_argument("--f", help="profile f0, cut off at --support")
    p.add_argument("--support", type=float)
    p.add_argument("--nodes", type=int)

    p = sub.add_parser("localize", parents=[common], help="selection and certificates on a finite space")
    p.add_argument("--space", help="JSON space file; a random space is drawn when omitted")
    p.add_argument("--points", type=int)
    p.add_argument("--radii")
    p.add_argument("--micro-n", type=float)
    p.add_argument("--quantile", type=float)
    p.add_argument("--trials", type=int, help="random probes for the weak-norm bound")
    p.add_argument("--scaling-dims", help="instead: weak-norm probe on {0,1,2}^d for these d (report only)")

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma list of criterion numbers")
    return ap


def resolve(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a mapping")
        # allow a per-command section next to shared keys
        section = loaded.pop(args.command, {}) if isinstance(loaded.get(args.command), dict) else {}
        cfg = {k.replace("-", "_"): v for k, v in {**loaded, **section}.items()}
    out = dict(DEFAULTS)
    out.update(cfg)
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            out[k] = v
    out["command"] = args.command
    return out


def _quad(o) -> QuadratureConfig:
    return QuadratureConfig(rtol=float(o["rtol"]), seed=int(o["seed"]))


def _density(o, n=None):
    try:
        return density_from_text(str(o["density"]), n)
    except DensitySyntaxError as exc:
        raise ConfigError(f"density: {exc}") from exc


def _provenance(o, **extra):
    keys = ("rtol", "seed")
    return {**{k: o[k] for k in keys}, **extra}


def cmd_ball_measure(o):
    n, s, R = int(o["n"]), float(o["s"]), float(o["R"])
    w = _density(o, n)
    q = _quad(o)
    spec = BallSpec(n, s, R)
    lm = ball_measure(w, spec, q).log_value
    rep = ExperimentReport("ball-measure", ["density", "n", "s", "R", "log_measure", "log_volume", "average",
                                            "mc_estimate", "mc_stderr"],
                           parameters={"density": w.name, "n": n, "s": s, "R": R},
                           provenance=_provenance(o))
    mc, se = (math.nan, math.nan)
    if o["mc"]:
        mc, se = mc_ball_measure(w, spec, q)
    rep.add(w.name, n, s, R, lm, log_ball_volume(n, R), ball_average(w, spec, q), mc, se)
    print(f"log mu(B) = {lm:.15g}")
    return rep, True


def cmd_constants(o):
    dims = _ints(o["dims"] or "10,50,200,1000,2000")
    grid = SweepGrid(float(o["r_min"]), float(o["r_max"]), int(o["r_count"]),
                     refine_depth=int(o["depth"]), dimensions=tuple(dims))
    q = _quad(o)
    wanted = set((o["only"] or "beta,K0,K1,K,Ap,A1").split(","))
    p = float(o["p"])
    rep = ExperimentReport("constants", ["density", "constant", "n", "value", "witness"],
                           parameters={"density": str(o["density"]), "dims": dims, "p": p},
                           provenance=_provenance(o, grid=grid.describe()))
    if "beta" in wanted:
        est = dyadic_oscillation(_density(o, dims[0]), grid)
        rep.add(str(o["density"]), "beta", "", est.value, json.dumps(est.witness))
    for n in dims:
        w = _density(o, n)
        todo = [("K0", lambda: micro_doubling_constant(w, n, grid, q)),
                ("K1", lambda: weak_doubling_constant(w, n, grid, q)),
                ("K", lambda: strong_micro_constant(w, n, grid, q)),
                ("Ap", lambda: ap_constant(w, n, p, grid, q)),
                ("A1", lambda: a1_constant(w, n, grid, q))]
        for name, fn in todo:
            if name in wanted:
                est = fn()
                rep.add(w.name, est.name, n, est.value, json.dumps(est.witness, default=float))
    return rep, True


def cmd_limit(o):
    dims = tuple(_ints(o["dims"])) if o["dims"] else geometric_schedule()
    exp = LimitExperiment(_density(o), _pairs(o["pairs"]), dims, float(o["tolerance"]))
    rep = limit_table(exp, _quad(o))
    rep.provenance.update(_provenance(o))
    return rep, rep.passed


def cmd_counterexample(o):
    alpha = float(o["alpha"])
    dims = tuple(_ints(o["dims"])) if o["dims"] else geometric_schedule(10, 4, int(o["n_max"]))
    res = shell_counterexample(alpha, dims, q=_quad(o))
    rep = res.report
    rep.parameters.update({"fit_exponent": res.fit.exponent, "fit_r2": res.fit.r2,
                           "lower_bound_exponent": res.lower_bound_fit.exponent,
                           "limit_target": res.limit_target, "limit_error": res.limit_error})
    rep.provenance.update(_provenance(o))
    print(f"fitted exponent {res.fit.exponent:.4f} (R^2 {res.fit.r2:.5f}); "
          f"lower-bound exponent {res.lower_bound_fit.exponent:.4f}; limit error {res.limit_error:.3g}")
    return rep, rep.passed


def cmd_power_family(o):
    dims = tuple(_ints(o["dims"])) if o["dims"] else tuple(range(10, 121, 10))
    fit, rep = power_family_experiment(float(o["alpha"]), dims, _quad(o))
    rep.parameters.update({"log_slope": fit.exponent, "rate": fit.rate, "r2": fit.r2})
    rep.provenance.update(_provenance(o))
    print(f"growth rate a = {fit.rate:.6g} per dimension (R^2 {fit.r2:.5f})")
    return rep, rep.passed


def cmd_maximal(o):
    n = int(o["n"])
    w = _density(o, n)
    try:
        f_expr = density_from_text(str(o["f"]), n)
    except DensitySyntaxError as exc:
        raise ConfigError(f"f: {exc}") from exc
    support = float(o["support"])
    nodes = Grid1D.default_nodes(int(o["nodes"]))
    grid = Grid1D.for_density(w, n, nodes)
    vals = np.where(grid.centers < support, f_expr(grid.centers), 0.0)
    F = RadialFunction(grid, vals)
    M, H = noncentered_max(F), hardy_operator(F)
    weak_m, weak_h = weak_type_ratio(M, F), weak_type_ratio(H, F)
    rep = ExperimentReport("maximal", ["t_left", "t_right", "f0", "noncentered_max", "hardy"],
                           parameters={"density": w.name, "n": n, "f": str(o["f"]), "support": support,
                                       "weak_ratio_noncentered": weak_m, "weak_ratio_hardy": weak_h},
                           provenance=_provenance(o, nodes=int(o["nodes"])))
    for i in range(grid.cells):
        rep.add(grid.nodes[i], grid.nodes[i + 1], vals[i], M.values[i], H.values[i])
    ok = weak_m <= 2 + 1e-9 and weak_h <= 1 + 1e-9
    print(f"weak ratios: noncentered {weak_m:.6g} (bound 2), Hardy {weak_h:.6g} (bound 1)")
    return rep, ok


def cmd_scaling(o):
    dims = _ints(o["scaling_dims"])
    if not dims or min(dims) < 1 or max(dims) > 6:
        raise ConfigError("scaling dims must lie in 1..6")
    rep = ExperimentReport("localize-scaling", ["n", "P", "probe", "n_log_n", "ratio"],
                           parameters={"dims": dims, "side": 3}, provenance=_provenance(o))
    for r in scaling_probe(dims):
        rep.add(r["n"], r["P"], r["probe"], r["n_log_n"], r["ratio"])
    print("probe / (n log n): " + ", ".join(f"{r:.3g}" for r in rep.column("ratio")))
    return rep, True


def cmd_localize(o):
    if o["scaling_dims"]:
        return cmd_scaling(o)
    rng = np.random.default_rng(int(o["seed"]))
    if o["space"]:
        try:
            space = FiniteMetricMeasureSpace.load(o["space"])
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"space: {exc}") from exc
    else:
        space = random_space(rng, int(o["points"]))
    n = float(o["micro_n"])
    T = TimeSet(np.array(sorted(_floats(o["radii"]))), n)
    f = rng.exponential(size=space.P) * (rng.random(space.P) < 0.4)
    consts = discrete_constants(space, n)
    Mf = brute_max(space, T, f)
    lam = float(np.quantile(Mf, float(o["quantile"])))
    if lam <= 0:
        lam = float(Mf.max()) / 2 if Mf.max() > 0 else 1.0
    state = run_selection(space, T, f, lam, n, consts.K0)
    cert = certify_localization(state, space, T, f)
    probe, _ = weak_norm_probe(space, T, rng, int(o["trials"]))
    rep = ExperimentReport("localize", ["quantity", "value"],
                           parameters={"P": space.P, "radii": T.radii.tolist(), "n": n, "lambda": lam},
                           provenance=_provenance(o, derived_constants="C1 = 16(1+K0), C2 = 1/(2 K0)"))
    for k, v in [("K0", consts.K0), ("K1", consts.K1), ("K", consts.K), ("family", len(state.family)),
                 ("selected", len(state.selected_balls())), ("disjoint", cert.disjoint),
                 ("claim_ok", cert.claim_ok), ("claim_slack", cert.claim_slack),
                 ("inclusion_ok", cert.inclusion_ok), ("headline_ok", cert.headline_ok),
                 ("headline_lhs", cert.headline_lhs), ("headline_rhs", cert.headline_rhs),
                 ("C1", cert.C1), ("C2", cert.C2), ("weak_norm_probe", probe)]:
        rep.add(k, v)
    for r in T.radii:
        rep.add(f"l1_norm_r={r:g}", single_radius_l1(space, float(r))[0])
    print(f"certificate {'passed' if cert.passed else 'FAILED'}; weak-norm probe {probe:.6g}")
    return rep, cert.passed


def cmd_verify(o):
    from .acceptance import run_all
    only = _ints(o["only"]) if o.get("only") else None
    results = run_all(only)
    rep = ExperimentReport("verify", ["criterion", "title", "passed", "seconds", "details"],
                           provenance=_provenance(o))
    for r in results:
        rep.add(r.number, r.title, r.passed, r.seconds, json.dumps(r.details, default=float))
    return rep, all(r.passed for r in results)


COMMANDS = {
    "ball-measure": cmd_ball_measure, "constants": cmd_constants, "limit": cmd_limit,
    "counterexample": cmd_counterexample, "power-family": cmd_power_family, "maximal": cmd_maximal,
    "localize": cmd_localize, "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        opts = resolve(args)
        rep, ok = COMMANDS[args.command](opts)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    rep.passed = bool(ok)
    csv_path, json_path = rep.write(opts["out"], opts["stamp"])
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK if ok else EXIT_CERTIFICATE


if __name__ == "__main__":
    sys.exit(main())
