"""Adaptive Gauss-Legendre quadrature carried out entirely in log space.

The integrand is supplied as a vectorized function returning log f(t).
Panel sums are combined with logsumexp, so the running maximum of the
log-integrand acts as the shift and nothing is ever exponentiated outside
the double range.  Panels are graded geometrically toward every breakpoint,
which is the same as integrating in u = log|t - t_k| near each point and
makes algebraic endpoint singularities converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

_EPS = np.finfo(float).eps
# panels are never refined below this many ulps of their location, so
# Gauss nodes stay distinguishable from a singular breakpoint
_NEAR = 1e4


class DivergenceError(ArithmeticError):
    """Raised when refinement toward a breakpoint does not converge.

    ``partial`` carries the log of the estimate accumulated so far.
    """

    def __init__(self, message: str, partial: float = math.nan, where: float | None = None):
        super().__init__(message)
        self.partial = partial
        self.where = where


@dataclass(frozen=True)
class QuadResult:
    log_value: float
    rel_error: float
    evaluations: int
    panels: int


_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _rule(order: int):
    if order not in _RULES:
        x, w = np.polynomial.legendre.leggauss(order)
        _RULES[order] = (x, np.log(w))
    return _RULES[order]


def _panel_logsums(logf, lo, hi, order):
    """log of the Gauss-Legendre sum on each panel [lo_i, hi_i]."""
    x, logw = _rule(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(logf(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if np.isnan(vals).any() or np.isposinf(vals).any():
        bad = nodes[~np.isfinite(vals) & ~np.isneginf(vals)]
        raise DivergenceError("integrand is not finite on the integration range",
                              where=float(bad.flat[0]))
    with np.errstate(divide="ignore"):
        loghalf = np.log(half)
    return logsumexp(vals + logw[None, :], axis=1) + loghalf, nodes.size


def _graded_breaks(l, r, ratio, min_rel):
    length = r - l
    floor_l = max(_NEAR * _EPS * max(abs(l), 1e-300), min_rel * length)
    floor_r = max(_NEAR * _EPS * max(abs(r), 1e-300), min_rel * length)
    pts = [l, r, 0.5 * (l + r)]
    off = 0.5 * length * ratio
    while off > floor_l:
        pts.append(l + off)
        off *= ratio
    off = 0.5 * length * ratio
    while off > floor_r:
        pts.append(r - off)
        off *= ratio
    return np.unique(np.array(pts))


def log_integrate(
    logf: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    points: Sequence[float] = (),
    singular: Sequence[float] = (),
    rtol: float = 1e-10,
    order: int = 15,
    max_rounds: int = 40,
    grade_ratio: float = 0.25,
    min_rel_width: float = 1e-15,
    check_divergence: bool = True,
) -> QuadResult:
    """log of the integral of exp(logf) over [a, b].

    ``points`` are interior breakpoints (kinks, peaks); ``singular`` are
    points where the integrand may blow up.  The mesh is graded toward each of
    them and toward both ends.  Breakpoints closer than a few thousand ulps are
    merged, singular points winning, so no Gauss node lands on a singularity.
    """
    if not b > a:
        if b == a:
            return QuadResult(-math.inf, 0.0, 0, 0)
        raise ValueError(f"empty interval [{a}, {b}]")
    cuts = _merge_cuts(a, b, points, singular)
    a, b = cuts[0], cuts[-1]
    if len(cuts) < 2:
        return QuadResult(-math.inf, 0.0, 0, 0)
    edges = np.concatenate(
        [_graded_breaks(l, r, grade_ratio, min_rel_width)[:-1] for l, r in zip(cuts[:-1], cuts[1:])]
        + [np.array([cuts[-1]])]
    )
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    # the panel touching each breakpoint is replaced by a power-law tail
    # fitted on its two geometric neighbours
    touching = np.zeros(lo.size, dtype=bool)
    tails = []
    evals = 0
    for c in cuts:
        for side in (-1, 1):
            idx = np.nonzero(hi == c)[0] if side < 0 else np.nonzero(lo == c)[0]
            if idx.size == 0:
                continue
            i0 = int(idx[0])
            nb = [i0 - 1, i0 - 2] if side < 0 else [i0 + 1, i0 + 2]
            if min(nb) < 0 or max(nb) >= lo.size:
                continue
            w0 = hi[i0] - lo[i0]
            w1, w2 = hi[nb[0]] - lo[nb[0]], hi[nb[1]] - lo[nb[1]]
            if not (abs(w1 / w0 - 1 / grade_ratio + 1) < 1e-6 and abs(w2 / w1 - 1 / grade_ratio) < 1e-6):
                continue
            m, e = _panel_logsums(logf, lo[nb], hi[nb], order)
            evals += e
            touching[i0] = True
            tails.append(_power_tail(m[0], m[1]))
    lo, hi = lo[~touching], hi[~touching]

    accepted: list[np.ndarray] = [np.array(tails)] if tails else []
    acc_err = 0.0
    n_panels = 0
    first = True
    for _ in range(max_rounds):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        coarse, e1 = _panel_logsums(logf, lo, hi, order)
        left, e2 = _panel_logsums(logf, lo, mid, order)
        right, e3 = _panel_logsums(logf, mid, hi, order)
        evals += e1 + e2 + e3
        fine = np.logaddexp(left, right)
        if first and check_divergence:
            _check_breakpoints(cuts, lo, hi, fine, accepted)
            first = False
        total = logsumexp(np.concatenate([fine] + accepted)) if (accepted or fine.size) else -math.inf
        if total == -math.inf:
            accepted.append(fine)
            lo = lo[:0]
            break
        with np.errstate(invalid="ignore"):
            err = np.abs(np.exp(fine - total) - np.exp(coarse - total))
        err = np.nan_to_num(err, nan=0.0)
        too_small = (hi - lo) <= _NEAR * _EPS * np.maximum(np.abs(mid), 1e-300)
        done = (err <= 0.02 * rtol) | too_small
        accepted.append(fine[done])
        acc_err += float(err[done].sum())
        n_panels += int(done.sum())
        lo_n, hi_n, mid_n = lo[~done], hi[~done], mid[~done]
        lo = np.concatenate([lo_n, mid_n])
        hi = np.concatenate([mid_n, hi_n])
    if lo.size:
        # unresolved panels after the round budget: keep their fine values
        coarse, e1 = _panel_logsums(logf, lo, hi, order)
        evals += e1
        accepted.append(coarse)
        acc_err += math.inf
        n_panels += lo.size
    allv = np.concatenate(accepted) if accepted else np.array([-math.inf])
    total = float(logsumexp(allv)) if allv.size else -math.inf
    return QuadResult(total, acc_err, evals, n_panels)


def _merge_cuts(a, b, points, singular):
    def close(x, y):
        return abs(x - y) <= _NEAR * _EPS * max(abs(x), abs(y), 1e-300)

    sing = sorted(float(p) for p in singular if a - abs(a) * 1e-12 <= p <= b + abs(b) * 1e-12)
    cuts = []
    for p in sing:
        if not any(close(p, c) for c in cuts):
            cuts.append(p)
    # endpoints snap to a singular point sitting on top of them
    for e in (float(a), float(b)):
        if not any(close(e, c) for c in cuts):
            cuts.append(e)
    for p in points:
        p = float(p)
        if a < p < b and not any(close(p, c) for c in cuts):
            cuts.append(p)
    lo = min(c for c in cuts if close(c, a) or c <= a) if any(close(c, a) or c <= a for c in cuts) else a
    hi = max(c for c in cuts if close(c, b) or c >= b) if any(close(c, b) or c >= b for c in cuts) else b
    return sorted(c for c in cuts if lo <= c <= hi)


def _power_tail(log_m1, log_m2):
    """log of the mass between a breakpoint and its nearest panel.

    With panels [d, 4d] and [4d, 16d] of masses m1, m2 and q = m1 / m2, a
    local power law gives the remaining mass m1 * q / (1 - q).
    """
    if log_m1 == -math.inf:
        return -math.inf
    if log_m2 == -math.inf:
        return log_m1
    log_q = min(log_m1 - log_m2, math.log(0.9))
    return log_m1 + log_q - math.log1p(-math.exp(log_q))


def _check_breakpoints(cuts, lo, hi, fine, accepted):
    """Flag non-integrable behaviour at a breakpoint.

    Near each breakpoint the initial panels shrink geometrically; for an
    integrable |t - c|^(-g) the panel masses shrink by ratio^(1 - g) per step,
    for g >= 1 they do not shrink at all.
    """
    total = logsumexp(fine)
    if total == -math.inf:
        return
    for c in cuts:
        for side in (-1, 1):
            if side < 0:
                sel = np.nonzero(hi <= c)[0][::-1]
            else:
                sel = np.nonzero(lo >= c)[0]
            # the panel touching c is wider than the geometric ratio implies
            if sel.size < 5:
                continue
            inner = fine[sel[1:5]]
            if inner[0] - total < math.log(1e-7):
                continue
            steps = np.diff(inner[::-1])
            # masses growing (or flat) toward c means the tail does not vanish
            if np.all(steps > math.log(0.9)):
                raise DivergenceError(
                    f"integrand is not integrable at t={c:g}",
                    partial=float(total),
                    where=float(c),
                )
