"""One-dimensional weighted maximal operators and small brute-force oracles.

All 1-D operators act on step functions over a fixed node vector and only
use intervals whose endpoints are nodes ("the grid algebra").  Each value is
therefore attained by an actual interval, i.e. it is a lower bound of the
continuum operator, and inequality checks built on them are one-sided safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .density import RadialDensity, constant
from .geometry import DEFAULT_QUAD, BallSpec, QuadratureConfig, radial_integral
from .quadrature import DivergenceError, log_integrate
from .weights import ConstantEstimate, SweepGrid

_BLOCK = 256


@dataclass
class Grid1D:
    """Nodes t_0 < ... < t_N and the weight mass of each cell [t_i, t_{i+1}].

    Masses are stored relative to exp(log_scale) so that v(t) = w0(t) t^(n-1)
    stays representable in high dimension.
    """

    nodes: np.ndarray
    masses: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.masses.shape != (self.nodes.size - 1,):
            raise ValueError("one mass per cell required")
        if np.any(self.masses < 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("cell masses must be finite and nonnegative")

    @property
    def cells(self) -> int:
        return self.masses.size

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @classmethod
    def lebesgue(cls, nodes) -> "Grid1D":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.diff(nodes))

    @classmethod
    def default_nodes(cls, count: int = 4096, lo: float = 1e-4, hi: float = 1e2) -> np.ndarray:
        return np.concatenate([[0.0], np.geomspace(lo, hi, count)])

    @classmethod
    def for_density(cls, density: RadialDensity, n: int, nodes=None) -> "Grid1D":
        """Cells weighted by v(t) = w0(t) t^(n-1)."""
        nodes = cls.default_nodes() if nodes is None else np.asarray(nodes, dtype=float)
        inside = [p for p in density.singular_points if nodes[0] < p < nodes[-1]]
        if inside:
            nodes = np.unique(np.concatenate([nodes, inside]))
        lo, hi = nodes[:-1], nodes[1:]
        x, w = np.polynomial.legendre.leggauss(16)
        half = 0.5 * (hi - lo)
        pts = 0.5 * (hi + lo)[:, None] + half[:, None] * x[None, :]

        def logv(t):
            with np.errstate(divide="ignore"):
                return density.log_eval(t) + (n - 1) * np.log(t)

        with np.errstate(divide="ignore"):
            logm = logsumexp(logv(pts) + np.log(w)[None, :], axis=1) + np.log(half)
        special = set(density.singular_points) | {0.0}
        for i in range(lo.size):
            if lo[i] in special or hi[i] in special:
                try:
                    logm[i] = log_integrate(logv, lo[i], hi[i], singular=[p for p in special
                                                                         if p in (lo[i], hi[i])]).log_value
                except DivergenceError:
                    logm[i] = math.inf
        if np.isposinf(logm).any() or np.isnan(logm).any():
            raise DivergenceError(f"{density.name} is not integrable against t^{n - 1} on the grid")
        scale = float(np.max(logm))
        return cls(nodes, np.exp(logm - scale), scale)


@dataclass
class RadialFunction:
    """A step function: ``values[i]`` on cell i of ``grid``."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.cells,):
            raise ValueError("one value per cell required")

    @classmethod
    def sample(cls, grid: Grid1D, fn) -> "RadialFunction":
        return cls(grid, np.asarray(fn(grid.centers), dtype=float))

    def at(self, x) -> np.ndarray:
        """Value at points x; at a node, the larger of the two adjacent cells."""
        x = np.asarray(x, dtype=float)
        nodes = self.grid.nodes
        right = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, self.grid.cells - 1)
        left = np.clip(np.searchsorted(nodes, x, side="left") - 1, 0, self.grid.cells - 1)
        return np.maximum(self.values[right], self.values[left])

    def l1(self) -> float:
        """Integral of |f| v relative to exp(grid.log_scale)."""
        return float(np.sum(np.abs(self.values) * self.grid.masses))


def _prefix(x):
    out = np.zeros(x.size + 1, dtype=np.longdouble)
    np.cumsum(x, out=out[1:])
    return out


def noncentered_max(F: RadialFunction, grid: Grid1D | None = None) -> RadialFunction:
    """sup over node intervals [a, b] containing the cell of (int |F| v) / v([a, b])."""
    grid = grid or F.grid
    m = grid.masses
    P = _prefix(np.abs(F.values) * m)
    V = _prefix(m)
    N = m.size
    out = np.full(N, -np.inf)
    idx = np.arange(N)
    for j0 in range(0, N, _BLOCK):
        js = idx[j0:j0 + _BLOCK]
        num = P[None, 1:] - P[js][:, None]
        den = V[None, 1:] - V[js][:, None]
        valid = (idx[None, :] >= js[:, None]) & (den > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            avg = np.where(valid, num / np.where(den > 0, den, 1), -np.inf).astype(float)
        # best interval starting at j and ending at or after cell i
        suff = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
        suff = np.where(idx[None, :] >= js[:, None], suff, -np.inf)
        out = np.maximum(out, suff.max(axis=0))
    out = np.where(np.isfinite(out), out, 0.0)
    return RadialFunction(grid, out)


def noncentered_at_nodes(M: RadialFunction) -> np.ndarray:
    """Maximal function at each node: intervals through a node contain an adjacent cell."""
    v = M.values
    return np.maximum(np.concatenate([[v[0]], v]), np.concatenate([v, [v[-1]]]))


def one_sided_max(F: RadialFunction, direction: str = "right") -> np.ndarray:
    """Lebesgue one-sided maximal function at the nodes.

    right: sup_h (1/h) int_t^{t+h} |F|;  left: sup_h (1/h) int_{t-h}^t |F|.
    """
    if direction not in ("right", "left"):
        raise ValueError("direction is 'right' or 'left'")
    x = F.grid.nodes
    P = _prefix(np.abs(F.values) * np.diff(x))
    N = x.size
    out = np.zeros(N)
    idx = np.arange(N)
    for i0 in range(0, N, _BLOCK):
        iis = idx[i0:i0 + _BLOCK]
        num = P[None, :] - P[iis][:, None]
        den = x[None, :] - x[iis][:, None]
        ok = idx[None, :] > iis[:, None] if direction == "right" else idx[None, :] < iis[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(ok, (num / np.where(ok, den, 1)).astype(float), -np.inf)
        out[iis] = np.maximum(r.max(axis=1), 0.0)
    return out


def weak_type_ratio(M: RadialFunction, F: RadialFunction) -> float:
    """sup over lambda of lambda v({M > lambda}) / int |F| v, exact on the grid."""
    m = M.grid.masses
    order = np.argsort(-M.values, kind="stable")
    vals = M.values[order]
    cum = np.cumsum(m[order])
    # ties: the level set {M >= value} includes every tied cell
    last = np.r_[vals[1:] != vals[:-1], True]
    best = float(np.max(vals[last] * cum[last])) if vals.size else 0.0
    norm = F.l1()
    return best / norm if norm > 0 else 0.0


def hardy_operator(f: RadialFunction, density: RadialDensity | None = None, n: int | None = None,
                   grid: Grid1D | None = None) -> RadialFunction:
    """sup over origin-centered balls B_R with R >= |x| of the mu-average of |f|.

    ``grid`` must start at 0 and carry masses of v(t) = w0(t) t^(n-1); it is
    built from (density, n) on f's nodes when omitted.
    """
    if grid is None:
        grid = f.grid if density is None else Grid1D.for_density(density, n, f.grid.nodes)
    if grid.nodes[0] != 0.0:
        raise ValueError("Hardy operator needs a grid starting at the origin")
    P = _prefix(np.abs(f.values) * grid.masses)
    V = _prefix(grid.masses)
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(V > 0, P / np.where(V > 0, V, 1), -np.inf).astype(float)
    # cell i needs a radius t_k with k >= i + 1
    suff = np.maximum.accumulate(avg[::-1])[::-1]
    out = suff[1:]
    return RadialFunction(grid, np.where(np.isfinite(out), out, 0.0))


def radial_reduction_bound(f: RadialFunction, K1: float, grid: Grid1D | None = None) -> RadialFunction:
    """Pointwise envelope (1 + K1) * noncentered maximal function of f0."""
    M = noncentered_max(f, grid)
    return RadialFunction(M.grid, (1.0 + K1) * M.values)


def delta_maximal(density: RadialDensity, n: int, x_norm: float,
                  q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Maximal function of a unit point mass at the origin, evaluated at |x|.

    The best ball through x that still contains the origin has radius |x|
    in the limit, so the value is 1 / mu(B(x, |x|)).
    """
    try:
        lm = radial_integral(density, BallSpec(n, x_norm, x_norm), q=q)
    except DivergenceError:
        return 0.0
    return math.exp(-lm) if -lm < 709 else math.inf


@dataclass
class DeltaBound(ConstantEstimate):
    heuristic: bool = False
    log_value: float = math.nan


def delta_lower_bound(density: RadialDensity, n: int, radii=None,
                      q: QuadratureConfig = DEFAULT_QUAD) -> DeltaBound:
    """max over level radii s of mu(B_s) / mu(B(z, s)), |z| = s.

    This bounds the weak (1,1) constant from below when the point-mass
    maximal function decreases radially, which is checked on the same mesh;
    otherwise the result is flagged heuristic.
    """
    if radii is None:
        radii = np.geomspace(0.25, 4.0, 33)
    elif isinstance(radii, SweepGrid):
        radii = radii.radii()
    radii = np.sort(np.asarray(radii, dtype=float))
    inner = np.array([radial_integral(density, BallSpec(n, 0.0, s), q=q) for s in radii])
    outer = np.array([radial_integral(density, BallSpec(n, s, s), q=q) for s in radii])
    logr = inner - outer
    # M delta_0(s) = exp(-outer) must be nonincreasing in s
    monotone = bool(np.all(np.diff(-outer) <= 1e-9 * np.maximum(1.0, np.abs(outer[1:]))))
    i = int(np.argmax(logr))
    return DeltaBound("delta_weak_lower_bound", math.exp(min(logr[i], 709.0)),
                      {"n": n, "s": float(radii[i])},
                      {"radii": [float(radii[0]), float(radii[-1]), len(radii)]},
                      heuristic=not monotone, log_value=float(logr[i]))


def delta_level_check(density: RadialDensity, n: int, radii, q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """max over mesh levels of lambda mu({M delta_0 > lambda}); needs radial monotonicity."""
    radii = np.sort(np.asarray(radii, dtype=float))
    outer = np.array([radial_integral(density, BallSpec(n, s, s), q=q) for s in radii])
    if np.any(np.diff(outer) < -1e-9 * np.maximum(1.0, np.abs(outer[1:]))):
        raise ValueError("point-mass maximal function is not radially decreasing on this mesh")
    inner = np.array([radial_integral(density, BallSpec(n, 0.0, s), q=q) for s in radii])
    # level lambda just below M delta_0(s) has level set B_s
    return float(np.exp(np.max(inner - outer)))


# ---------------------------------------------------------------------------
# brute-force centered maximal operator on a 1-D or 2-D lattice
# ---------------------------------------------------------------------------

@dataclass
class LatticeGrid:
    """Points k * h for |k_i| <= half in dimension d."""

    d: int
    half: int
    h: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("lattice oracle is limited to d <= 2")

    @property
    def shape(self):
        return (2 * self.half + 1,) * self.d

    def coords(self) -> np.ndarray:
        k = np.arange(-self.half, self.half + 1) * self.h
        if self.d == 1:
            return k[:, None]
        X, Y = np.meshgrid(k, k, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.coords(), axis=1)


def _ball_max(vals: np.ndarray, wts: np.ndarray, dist: np.ndarray, rmax: float) -> np.ndarray:
    """Max over open balls {dist < r}, r <= rmax, of sum(vals*w)/sum(w); vals is (k, P)."""
    order = np.argsort(dist, kind="stable")
    d = dist[order]
    cw = np.cumsum(wts[order])
    cf = np.cumsum(vals[:, order] * wts[order][None, :], axis=1)
    # prefix ending at each distinct distance; r can exceed d only if d < rmax
    last = np.r_[d[1:] != d[:-1], True] & (d < rmax) & (cw > 0)
    if not last.any():
        return np.zeros(vals.shape[0])
    return np.max(cf[:, last] / cw[last][None, :], axis=1)


def grid_maximal_oracle(f: np.ndarray, density: RadialDensity | None, lattice: LatticeGrid) -> np.ndarray:
    """Centered maximal function on the lattice by exhaustive search over radii.

    Ball averages are Riemann sums with point weights w0(|x|); only balls that
    fit inside the lattice box are used.  ``f`` may carry a leading batch axis.
    """
    density = density or constant(1.0)
    pts = lattice.coords()
    P = pts.shape[0]
    F = np.abs(np.asarray(f, dtype=float)).reshape(-1, P)
    w = density(np.linalg.norm(pts, axis=1))
    w = np.where(np.isfinite(w), w, 0.0)
    L = lattice.half * lattice.h
    out = np.zeros_like(F)
    for i in range(P):
        dist = np.linalg.norm(pts - pts[i], axis=1)
        rmax = L - np.max(np.abs(pts[i])) + 0.5 * lattice.h
        out[:, i] = _ball_max(F, w, dist, rmax)
    return out.reshape(np.shape(f))


def lattice_hardy(f: np.ndarray, density: RadialDensity | None, lattice: LatticeGrid) -> np.ndarray:
    """sup over origin-centered balls B_R, R >= |x|, of the mu-average of |f|."""
    density = density or constant(1.0)
    pts = lattice.coords()
    P = pts.shape[0]
    F = np.abs(np.asarray(f, dtype=float)).reshape(-1, P)
    r = np.linalg.norm(pts, axis=1)
    w = density(r)
    w = np.where(np.isfinite(w), w, 0.0)
    order = np.argsort(r, kind="stable")
    rs = r[order]
    cw = np.cumsum(w[order])
    cf = np.cumsum(F[:, order] * w[order][None, :], axis=1)
    last = np.r_[rs[1:] != rs[:-1], True] & (rs < lattice.half * lattice.h + 0.5 * lattice.h)
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(cw[None, :] > 0, cf / np.where(cw > 0, cw, 1)[None, :], -np.inf)
    avg = np.where(last[None, :], avg, -np.inf)
    # prefix through radius rho is a ball {|y| < R} with R >= |x| iff the next
    # distinct norm after rho is >= |x|
    uniq = rs[last]
    # balls must stay inside the box, so the radius is capped
    nxt = np.minimum(np.r_[uniq[1:], np.inf], lattice.half * lattice.h + 0.5 * lattice.h)
    levels = avg[:, last]
    suff = np.maximum.accumulate(levels[:, ::-1], axis=1)[:, ::-1]
    # for each point, the first admissible prefix index
    first = np.searchsorted(nxt, r, side="left")
    res = suff[:, np.clip(first, 0, uniq.size - 1)]
    res = np.where(np.isfinite(res) & (first < uniq.size)[None, :], res, 0.0)
    return res.reshape(np.shape(f))
