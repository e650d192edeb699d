"""Finite metric measure spaces: maximal operators, doubling constants and the
covering/selection construction with an exact certificate of its inequalities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _fsum(vec, mask) -> float:
    """Correctly rounded masked sum, so equal sets always give equal masses."""
    return math.fsum(np.asarray(vec)[np.asarray(mask, dtype=bool)])


class CertificateFailure(RuntimeError):
    def __init__(self, certificate):
        super().__init__(f"certificate failed: {certificate.violations[:3]}")
        self.certificate = certificate


@dataclass
class FiniteMetricMeasureSpace:
    distances: np.ndarray
    weights: np.ndarray
    labels: list | None = None

    def __post_init__(self):
        D = np.asarray(self.distances, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("distance matrix must be square")
        if w.shape != (D.shape[0],):
            raise ValueError("one weight per point")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and strictly positive")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise ValueError("distances must be finite and nonnegative")
        if not np.allclose(D, D.T, rtol=0, atol=0) or np.any(np.diag(D) != 0):
            raise ValueError("distance matrix must be symmetric with zero diagonal")
        if np.any(D[~np.eye(D.shape[0], dtype=bool)] == 0):
            raise ValueError("distinct points must have positive distance")
        if D.shape[0] <= 300:
            tol = 1e-12 * max(1.0, float(D.max(initial=0.0)))
            for k in range(D.shape[0]):
                if np.any(D > D[:, k, None] + D[None, k, :] + tol):
                    raise ValueError(f"triangle inequality fails through point {k}")
        self.distances, self.weights = D, w

    @property
    def P(self) -> int:
        return self.weights.size

    @classmethod
    def from_points(cls, pts, weights=None) -> "FiniteMetricMeasureSpace":
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        w = np.ones(len(pts)) if weights is None else weights
        return cls(D, w)

    def ball(self, x: int, r: float) -> np.ndarray:
        return self.distances[x] < r

    def balls(self, r: float) -> np.ndarray:
        return self.distances < r

    def measure(self, mask) -> float:
        return _fsum(self.weights, mask)

    def ball_measures(self, r: float) -> np.ndarray:
        return self.balls(r).astype(float) @ self.weights

    # interchange format: JSON with a dense lower triangle of distances
    def to_dict(self) -> dict:
        D = self.distances
        return {"points": self.labels if self.labels is not None else list(range(self.P)),
                "distances": [D[i, :i].tolist() for i in range(self.P)],
                "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMetricMeasureSpace":
        for key in ("points", "distances", "weights"):
            if key not in d:
                raise ValueError(f"missing field '{key}'")
        P = len(d["points"])
        rows = d["distances"]
        if len(rows) != P or any(len(rows[i]) != i for i in range(P)):
            raise ValueError("distances must be the strict lower triangle, row i of length i")
        D = np.zeros((P, P))
        for i in range(P):
            D[i, :i] = rows[i]
        D = D + D.T
        return cls(D, np.asarray(d["weights"], dtype=float), list(d["points"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FiniteMetricMeasureSpace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def lattice_space(side: int, dim: int, spacing: float = 1.0) -> FiniteMetricMeasureSpace:
    """Equal weights on {0, ..., side-1}^dim with Euclidean distances."""
    axes = [np.arange(side) * spacing] * dim
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    return FiniteMetricMeasureSpace.from_points(pts)


def random_space(rng: np.random.Generator, P: int, dim: int = 2) -> FiniteMetricMeasureSpace:
    pts = rng.uniform(0.0, 4.0, size=(P, dim))
    return FiniteMetricMeasureSpace.from_points(pts, rng.lognormal(0.0, 1.0, P))


@dataclass
class TimeSet:
    radii: np.ndarray
    n: float = 2.0
    lacunarity: float | None = None

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size == 0 or np.any(r <= 0):
            raise ValueError("radii must be positive")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if self.n <= 1:
            raise ValueError("block parameter n must exceed 1")
        if self.lacunarity is not None:
            if self.lacunarity <= 1 or np.any(r[1:] <= self.lacunarity * r[:-1]):
                raise ValueError(f"radii are not {self.lacunarity}-lacunary")
        self.radii = r

    def block(self, R: float) -> int:
        """k with n^k <= R < n^(k+1)."""
        k = math.floor(math.log(R) / math.log(self.n))
        while self.n ** k > R:
            k -= 1
        while self.n ** (k + 1) <= R:
            k += 1
        return k

    def blocks(self) -> dict[int, np.ndarray]:
        out: dict[int, list] = {}
        for r in self.radii:
            out.setdefault(self.block(r), []).append(r)
        return {k: np.array(v) for k, v in sorted(out.items())}


def brute_max(space: FiniteMetricMeasureSpace, T, f) -> np.ndarray:
    radii = T.radii if isinstance(T, TimeSet) else np.atleast_1d(np.asarray(T, dtype=float))
    g = np.abs(np.asarray(f, dtype=float)) * space.weights
    out = np.zeros(space.P)
    for r in radii:
        A = space.balls(r).astype(float)
        out = np.maximum(out, (A @ g) / (A @ space.weights))
    return out


def _midpoints(breaks: np.ndarray) -> np.ndarray:
    b = np.unique(breaks)
    top = b[-1] * 2.0 + 1.0
    return np.concatenate([0.5 * (b[:-1] + b[1:]), [top]])


@dataclass
class DiscreteConstants:
    K0: float
    K1: float
    K: float
    witnesses: dict


def _k1_at(space, r):
    A = space.balls(r)
    m = A.astype(float) @ space.weights
    meet = (A.astype(float) @ A.T.astype(float)) > 0
    ratio = np.where(meet, m[None, :] / m[:, None], 0.0)
    i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[i, j]), int(i), int(j)


def discrete_constants(space: FiniteMetricMeasureSpace, n: float) -> DiscreteConstants:
    """Exact K0, K1, K over all centers and all radii (sets only change at distances)."""
    c = 1.0 + 1.0 / n
    dists = np.unique(space.distances)
    K0 = K1 = K = 1.0
    wit = {"K0": (0, 0.0), "K1": (0, 0, 0.0), "K": (0, 0, 0.0)}
    for r in _midpoints(dists):
        k1, i, j = _k1_at(space, r)
        if k1 > K1:
            K1, wit["K1"] = k1, (i, j, float(r))
    for r in _midpoints(np.concatenate([dists, dists / c])):
        A = space.balls(r)
        m = A.astype(float) @ space.weights
        mc = space.ball_measures(c * r)
        q0 = mc / m
        i = int(np.argmax(q0))
        if q0[i] > K0:
            K0, wit["K0"] = float(q0[i]), (i, float(r))
        # strong: y in B(x, r), ratio mu(B(y, c r)) / mu(B(x, r))
        q = np.where(A, mc[None, :] / m[:, None], 0.0)
        x, y = np.unravel_index(np.argmax(q), q.shape)
        if q[x, y] > K:
            K, wit["K"] = float(q[x, y]), (int(x), int(y), float(r))
    return DiscreteConstants(K0, K1, K, wit)


def weak_doubling_at(space: FiniteMetricMeasureSpace, r: float) -> float:
    return _k1_at(space, r)[0]


def single_radius_l1(space: FiniteMetricMeasureSpace, r: float) -> tuple[float, int]:
    """L1(mu) norm of f -> M_r f: the largest adjoint column sum, with its column."""
    A = space.balls(r).astype(float)
    m = A @ space.weights
    cols = A.T @ (space.weights / m)
    y = int(np.argmax(cols))
    return float(cols[y]), y


def weak_norm_probe(space: FiniteMetricMeasureSpace, T, rng: np.random.Generator | None = None,
                    trials: int = 0) -> tuple[float, dict]:
    """Lower bound for the weak (1,1) norm of M_T from point masses and random inputs."""
    def level(vals, norm):
        order = np.argsort(-vals, kind="stable")
        v = vals[order]
        cum = np.cumsum(space.weights[order])
        last = np.r_[v[1:] != v[:-1], True]
        k = int(np.argmax(v[last] * cum[last]))
        return float(v[last][k] * cum[last][k]) / norm

    best, wit = 0.0, {}
    for x in range(space.P):
        f = np.zeros(space.P)
        f[x] = 1.0 / space.weights[x]
        val = level(brute_max(space, T, f), 1.0)
        if val > best:
            best, wit = val, {"point_mass": x}
    if trials:
        rng = rng or np.random.default_rng(0)
        for t in range(trials):
            f = rng.exponential(size=space.P) * (rng.random(space.P) < 0.3)
            norm = float(np.sum(f * space.weights))
            if norm == 0:
                continue
            val = level(brute_max(space, T, f), norm)
            if val > best:
                best, wit = val, {"random_trial": t}
    return best, wit


def scaling_probe(dims, side: int = 3) -> list[dict]:
    """Weak-norm probe of the full maximal operator on {0..side-1}^d for growing d.

    Report-only: the n log n curve is an upper-bound shape, so nothing is asserted.
    """
    rows = []
    for d in dims:
        space = lattice_space(side, int(d))
        # all radii: balls only change at the distinct distances
        T = _midpoints(np.unique(space.distances))
        probe, _ = weak_norm_probe(space, T)
        nlogn = d * math.log(d) if d > 1 else 1.0
        rows.append({"n": int(d), "P": space.P, "probe": probe, "n_log_n": nlogn, "ratio": probe / nlogn})
    return rows


# ---------------------------------------------------------------------------
# selection construction
# ---------------------------------------------------------------------------

@dataclass
class Ball:
    index: int
    center: int
    R: float
    block: int
    R_tilde: float = math.nan
    D: np.ndarray | None = None
    g: float = 0.0

    @property
    def R_zero(self) -> float:
        return self.R - self.R_tilde


@dataclass
class SelectionState:
    lam: float
    n: float
    K0: float
    family: list[Ball] = field(default_factory=list)
    half: list[Ball] = field(default_factory=list)
    parity: int | None = None
    selected: dict[int, list[Ball]] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)
    G: dict[int, np.ndarray] = field(default_factory=dict)
    A: dict[int, np.ndarray] = field(default_factory=dict)
    F_mask: np.ndarray | None = None

    def selected_balls(self) -> list[Ball]:
        return [b for k in self.order for b in self.selected.get(k, [])]


def _tilde_radius(space, z, R, n, target) -> float:
    """Candidate radii in [R n/(n+1), R), one per distinct ball, smallest first."""
    lo = R * n / (n + 1.0)
    row = space.distances[z]
    d = np.unique(row[(row >= lo) & (row < R)])
    cands = [lo]
    for i, dk in enumerate(d):
        nxt = d[i + 1] if i + 1 < d.size else R
        cands.append(0.5 * (dk + nxt))
    return cands, lo


def run_selection(space: FiniteMetricMeasureSpace, T: TimeSet, f, lam: float, n: float | None = None,
                  K0: float | None = None) -> SelectionState:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    n = T.n if n is None else n
    if K0 is None:
        K0 = discrete_constants(space, n).K0
    Tb = TimeSet(T.radii, n)
    absf = np.abs(np.asarray(f, dtype=float))
    fw = absf * space.weights
    st = SelectionState(lam, n, K0)
    Mf = brute_max(space, Tb, absf)
    st.F_mask = (Mf > lam) & (Mf <= 2 * lam)

    # (1) balls with average in (lam, 2 lam], largest radius first, ties by center
    fam = []
    for R in sorted(Tb.radii, reverse=True):
        for z in range(space.P):
            ball = space.ball(z, R)
            num, den = _fsum(fw, ball), space.measure(ball)
            if lam * den < num <= 2 * lam * den:
                fam.append(Ball(len(fam), z, float(R), Tb.block(R)))
    st.family = fam
    if not fam:
        return st

    # (2) concentric inner ball
    for B in fam:
        muB = space.measure(space.ball(B.center, B.R))
        cands, lo = _tilde_radius(space, B.center, B.R, n, lam * muB)
        for rho in cands:
            if _fsum(fw, space.ball(B.center, rho)) > lam * muB:
                B.R_tilde = float(rho)
                break
        else:  # pragma: no cover - the whole ball always qualifies
            raise AssertionError("no admissible inner radius")

    def union_zero(balls):
        m = np.zeros(space.P, dtype=bool)
        for B in balls:
            m |= space.ball(B.center, B.R_zero)
        return m

    # (3) parity split on blocks, keep the heavier half
    odd = [B for B in fam if B.block % 2]
    even = [B for B in fam if not B.block % 2]
    mo, me = space.measure(union_zero(odd)), space.measure(union_zero(even))
    st.parity = 1 if mo >= me else 0
    st.half = odd if st.parity else even

    # (4) disjointify the B0 sets in enumeration order
    covered = np.zeros(space.P, dtype=bool)
    for B in st.half:
        zero = space.ball(B.center, B.R_zero)
        B.D = zero & ~covered
        covered |= zero
        B.g = space.measure(B.D) / space.measure(space.ball(B.center, B.R))

    # (5) greedy selection from the top block down; constraint on the full ball
    blocks = sorted({B.block for B in st.half}, reverse=True)
    running = np.zeros(space.P)
    for k in blocks:
        chosen = [B for B in st.half if B.block == k
                  and np.all(running[space.ball(B.center, B.R)] <= 1.0)]
        Gk = np.zeros(space.P)
        for B in chosen:
            Gk[space.ball(B.center, B.R_tilde)] += B.g
        st.selected[k] = chosen
        st.order.append(k)
        st.G[k] = Gk
        running = running + Gk

    # (6) disjoint sets from the supports, later blocks take priority
    taken = np.zeros(space.P, dtype=bool)
    for k in reversed(st.order):
        supp = st.G[k] > 0
        st.A[k] = supp & ~taken
        taken |= supp
    return st


@dataclass
class LocalizationCertificate:
    disjoint: bool
    claim_ok: bool
    claim_slack: float
    inclusion_ok: bool
    headline_ok: bool
    headline_lhs: float
    headline_rhs: float
    C1: float
    C2: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.disjoint and self.claim_ok and self.inclusion_ok and self.headline_ok

    def raise_if_failed(self):
        if not self.passed:
            raise CertificateFailure(self)


def certify_localization(state: SelectionState, space: FiniteMetricMeasureSpace, T: TimeSet, f,
                         lam: float | None = None, n: float | None = None,
                         K0: float | None = None) -> LocalizationCertificate:
    lam = state.lam if lam is None else lam
    n = state.n if n is None else n
    K0 = state.K0 if K0 is None else K0
    Tb = TimeSet(T.radii, n)
    absf = np.abs(np.asarray(f, dtype=float))
    fw = absf * space.weights
    C1, C2 = 16.0 * (1.0 + K0), 1.0 / (2.0 * K0)
    viol = []

    # (a) pairwise disjoint output sets
    total = np.zeros(space.P, dtype=int)
    for k, Ak in state.A.items():
        total += Ak
    disjoint = bool(np.all(total <= 1))
    if not disjoint:
        viol.append(("a", int(np.argmax(total))))

    # (b) claim: mu(union D) <= (1 + K0) * sum over selected of mu(D)
    union_D = np.zeros(space.P, dtype=bool)
    for B in state.half:
        union_D |= B.D
    lhs_b = space.measure(union_D)
    rhs_b = (1.0 + K0) * math.fsum(space.measure(B.D) for B in state.selected_balls())
    claim_ok = lhs_b <= rhs_b
    if not claim_ok:
        viol.append(("b", lhs_b, rhs_b))

    # (c) B0 inside the level set of the block maximal function for non-absorbed balls
    blocks = Tb.blocks()
    Mk = {}
    for k in state.order:
        Mk[k] = brute_max(space, blocks[k], absf * state.A[k])
    inclusion_ok = True
    for k in state.order:
        for B in state.selected[k]:
            muB = space.measure(space.ball(B.center, B.R))
            part = _fsum(fw, space.ball(B.center, B.R_tilde) & state.A[k]) / muB
            if part > lam / 2:
                zero = space.ball(B.center, B.R_zero)
                bad = zero & ~(Mk[k] > lam / (2 * K0))
                if bad.any():
                    inclusion_ok = False
                    viol.append(("c", B.index, int(np.argmax(bad))))

    # (d) headline inequality
    lhs = space.measure(state.F_mask)
    level = 0.0
    for k, Mv in Mk.items():
        level += space.measure(Mv > C2 * lam)
    rhs = C1 * (math.fsum(fw) / lam + level)
    headline_ok = lhs <= rhs
    if not headline_ok:
        viol.append(("d", lhs, rhs))
    return LocalizationCertificate(disjoint, claim_ok, rhs_b - lhs_b, inclusion_ok, headline_ok,
                                   lhs, rhs, C1, C2, viol)
