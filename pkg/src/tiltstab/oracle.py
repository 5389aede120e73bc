"""Brute-force ground truth for tilt stability.

Tilted problems ``min g(x) - <v, x>`` over the feasible part of the closed
ball ``B_gamma(xbar)`` are solved by a dense grid followed by feasible pattern
search. The spread of minimizers across a grid of tilts gives single-valuedness
and an empirical Lipschitz modulus of the argmin map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .nlpmodel import ACTIVE_TOL, Problem
from .stability.second_order import tilt_bound

MAX_DIM = 3
TIE_TOL = 1e-6
GROWTH_SLACK = 1e-7
MIN_STEP = 1e-10
MAX_MOVES = 40  # per step length
CONSISTENCY_FACTOR = 1.15
CONSISTENCY_OFFSET = 0.02


class OracleError(Exception):
    pass


class DimensionTooHigh(OracleError):
    pass


class NoFeasibleGridPoint(OracleError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    gamma: float = 0.5
    tilt_radius: float = 0.05
    tilt_count: int = 5
    resolution: int = 65
    refine_iters: int = 50
    cluster_tol: float | None = None  # default 1e-3 * gamma

    def __post_init__(self):
        if self.gamma <= 0 or self.tilt_radius <= 0:
            raise ValueError("gamma and tilt_radius must be positive")
        if self.resolution < 32:
            raise ValueError("resolution must be at least 32")
        if self.tilt_count < 2:
            raise ValueError("tilt_count must be at least 2")

    @property
    def cluster_radius(self) -> float:
        return 1e-3 * self.gamma if self.cluster_tol is None else self.cluster_tol


@dataclass
class Cluster:
    point: np.ndarray
    diameter: float
    value: float
    members: int


@dataclass
class TiltSolution:
    v: np.ndarray
    clusters: list[Cluster]
    starts: int
    discarded: int = 0  # refined points that ended above the best value

    @property
    def single(self) -> bool:
        return len(self.clusters) == 1

    @property
    def separation(self) -> float:
        """Smallest distance between cluster representatives (``inf`` for one cluster)."""
        pts = [c.point for c in self.clusters]
        d = [np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2)]
        return float(min(d)) if d else float("inf")


@dataclass
class OracleReport:
    tilts: list[TiltSolution]
    single_valued: bool
    lipschitz: float  # inf unless single-valued
    config: OracleConfig
    witness: dict | None = None
    not_local_min: dict | None = None
    growth: dict | None = None


class FeasibleGrid:
    """Feasible grid points of the ball ``B_gamma(xbar)`` with cached objective values."""

    def __init__(self, P: Problem, xbar, cfg: OracleConfig):
        if P.n > MAX_DIM:
            raise DimensionTooHigh(f"oracle supports n <= {MAX_DIM}, got {P.n}")
        self.P, self.cfg = P, cfg
        self.xbar = np.asarray(xbar, dtype=float)
        ticks = np.linspace(-cfg.gamma, cfg.gamma, cfg.resolution)
        mesh = np.meshgrid(*([ticks] * P.n), indexing="ij")
        offs = np.stack([m.ravel() for m in mesh], axis=1)
        offs = offs[np.einsum("ij,ij->i", offs, offs) <= cfg.gamma**2 * (1 + 1e-12)]
        X = self.xbar + offs
        if P.m:
            X = X[P.constraint_values(X.T).max(axis=0) <= ACTIVE_TOL]
        if len(X) == 0:
            raise NoFeasibleGridPoint("no grid point in the ball satisfies the constraints")
        self.points = X
        self.values = np.asarray(P.objective_value(X.T), dtype=float) * np.ones(len(X))
        self.step = 2 * cfg.gamma / (cfg.resolution - 1)


def _pattern_directions(n: int) -> np.ndarray:
    dirs = [*np.eye(n), *(-np.eye(n))]
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            d = np.zeros(n)
            d[i], d[j] = si, sj
            dirs.append(d / np.sqrt(2))
    return np.array(dirs)


class _Refiner:
    """Feasible pattern search on ``g(x) - <v, x>`` inside the ball, rejecting infeasible steps.

    Besides the fixed coordinate and diagonal pattern, each step also tries the
    steepest-descent direction and its projections onto the nullspace and onto
    the linearized tangent cone of the nearly active constraints, which lets
    iterates slide along faces and edges that are not axis aligned.
    """

    def __init__(self, grid: FeasibleGrid):
        self.P, self.grid = grid.P, grid
        self.pattern = _pattern_directions(grid.P.n)

    def _phi(self, Y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.asarray(self.P.objective_value(Y.T), dtype=float) * np.ones(len(Y)) - Y @ v

    def _ok(self, Y: np.ndarray) -> np.ndarray:
        off = Y - self.grid.xbar
        ok = np.einsum("ij,ij->i", off, off) <= self.grid.cfg.gamma**2 * (1 + 1e-12)
        if self.P.m:
            ok &= self.P.constraint_values(Y.T).max(axis=0) <= ACTIVE_TOL
        return ok

    def _extra(self, y: np.ndarray, v: np.ndarray, s: float) -> list[np.ndarray]:
        g = self.P.objective_gradient(y) - v
        if np.linalg.norm(g) <= 1e-15:
            return []
        out = [-g / np.linalg.norm(g)]
        if self.P.m:
            q = self.P.constraint_values(y)
            J = self.P.constraint_jacobian(y)
            near = [i for i in range(self.P.m) if q[i] >= -2 * s * (1 + np.linalg.norm(J[i]))]
            if near:
                A = J[near]
                # projection of -g onto {d : A d = 0}
                coef, *_ = np.linalg.lstsq(A @ A.T, A @ g, rcond=None)
                candidates = [-(g - A.T @ coef)]
                # projection of -g onto {d : A d <= 0}: remove its component in cone(A^T)
                mu = lsq_linear(A.T, -g, bounds=(0.0, np.inf), method="bvls").x
                candidates.append(-g - A.T @ mu)
                for d in candidates:
                    if np.linalg.norm(d) > 1e-9 * np.linalg.norm(g):
                        out.append(d / np.linalg.norm(d))
        return out

    def refine(self, y: np.ndarray, v: np.ndarray, iters: int) -> tuple[np.ndarray, float]:
        s = self.grid.step
        fy = float(self._phi(y[None, :], v)[0])
        for _ in range(iters):
            for _move in range(MAX_MOVES):
                D = np.vstack([self.pattern, *self._extra(y, v, s)])
                Y = y + s * D
                ok = self._ok(Y)
                if not ok.any():
                    break
                vals = np.where(ok, self._phi(Y, v), np.inf)
                k = int(np.argmin(vals))
                if not vals[k] < fy - 1e-15 * (1.0 + abs(fy)):
                    break
                y, fy = Y[k], float(vals[k])
            s *= 0.5
            if s < MIN_STEP * (1.0 + np.abs(y).max()):
                break
        return y, fy


def _cluster(points: list[np.ndarray], values: list[float], tol: float) -> list[Cluster]:
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        for g in groups:
            if np.linalg.norm(points[i] - points[g[0]]) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    out = []
    for g in groups:
        P = [points[i] for i in g]
        diam = max((np.linalg.norm(a - b) for a, b in itertools.combinations(P, 2)), default=0.0)
        out.append(Cluster(points[g[0]].copy(), float(diam), float(values[g[0]]), len(g)))
    return out


def solve_tilted(P: Problem, xbar, v, cfg: OracleConfig, grid: FeasibleGrid | None = None) -> TiltSolution:
    """Minimizer clusters of ``g(x) - <v, x>`` over the feasible ball, sorted by value."""
    grid = grid or FeasibleGrid(P, xbar, cfg)
    v = np.asarray(v, dtype=float)
    phi = grid.values - grid.points @ v
    best = phi.min()
    starts = np.flatnonzero(phi <= best + TIE_TOL * (1 + abs(best)))
    refiner = _Refiner(grid)
    pts, vals = [], []
    for i in starts:
        y, fy = refiner.refine(grid.points[i].copy(), v, cfg.refine_iters)
        pts.append(y)
        vals.append(fy)
    top = min(vals)
    keep = [i for i, f in enumerate(vals) if f <= top + TIE_TOL * (1 + abs(top))]
    clusters = _cluster([pts[i] for i in keep], [vals[i] for i in keep], cfg.cluster_radius)
    return TiltSolution(v, clusters, len(starts), len(vals) - len(keep))


def tilt_grid(n: int, cfg: OracleConfig) -> np.ndarray:
    """``tilt_count^n`` box grid (from ``+rho`` down) on ``||v||_inf <= rho`` followed by the ``2n`` tilts ``+-rho/4 e_i``."""
    ticks = np.linspace(cfg.tilt_radius, -cfg.tilt_radius, cfg.tilt_count)
    box = np.array(list(itertools.product(ticks, repeat=n))) + 0.0
    axis = np.vstack([cfg.tilt_radius / 4 * np.eye(n), -cfg.tilt_radius / 4 * np.eye(n)]) + 0.0
    return np.vstack([box, axis])


def _lipschitz(tilts: list[TiltSolution], min_gap: float) -> float:
    best = 0.0
    for a, b in itertools.combinations(tilts, 2):
        dv = np.linalg.norm(a.v - b.v)
        if dv >= min_gap:
            best = max(best, np.linalg.norm(a.clusters[0].point - b.clusters[0].point) / dv)
    return float(best)


def verify_tilt_stability(P: Problem, xbar=None, cfg: OracleConfig | None = None) -> OracleReport:
    cfg = cfg or OracleConfig()
    xbar = P.point if xbar is None else np.asarray(xbar, dtype=float)
    grid = FeasibleGrid(P, xbar, cfg)
    tilts = [solve_tilted(P, xbar, v, cfg, grid) for v in tilt_grid(P.n, cfg)]
    single = all(t.single for t in tilts)
    witness = None
    if not single:
        t = next(t for t in tilts if not t.single)
        witness = {"v": t.v, "clusters": [c.point for c in t.clusters], "separation": t.separation}
    zero = next(t for t in tilts if not np.any(t.v))
    not_local_min = None
    if not any(np.linalg.norm(c.point - xbar) <= cfg.cluster_radius for c in zero.clusters):
        not_local_min = {"v": zero.v, "clusters": [c.point for c in zero.clusters]}
    lip = _lipschitz(tilts, cfg.tilt_radius / 10) if single else float("inf")
    return OracleReport(tilts, single, lip, cfg, witness, not_local_min)


def verify_growth(P: Problem, xbar, kappa: float, cfg: OracleConfig | None = None,
                  report: OracleReport | None = None) -> dict:
    """Uniform quadratic growth at level ``kappa`` for every solved (tilt, minimizer) pair."""
    cfg = cfg or OracleConfig()
    xbar = P.point if xbar is None else np.asarray(xbar, dtype=float)
    report = report or verify_tilt_stability(P, xbar, cfg)
    grid = FeasibleGrid(P, xbar, cfg)
    X, G = grid.points, grid.values
    worst = np.inf
    for t in report.tilts:
        if not t.single:
            continue
        u = t.clusters[0].point
        gu = float(P.objective_value(u))
        d = X - u
        gap = G - gu - d @ t.v - np.einsum("ij,ij->i", d, d) / (2 * kappa)
        k = int(np.argmin(gap))
        worst = min(worst, float(gap[k]))
        if gap[k] < -GROWTH_SLACK:
            return {"holds": False, "kappa": kappa, "witness": {"v": t.v, "u": u, "x": X[k], "gap": float(gap[k])}}
    return {"holds": True, "kappa": kappa, "min_gap": worst}


@dataclass
class ConsistencyRecord:
    lipschitz: float
    bound: float
    passed: bool
    factor: float = CONSISTENCY_FACTOR
    offset: float = CONSISTENCY_OFFSET
    notes: list[str] = field(default_factory=list)


def compare_modulus(lipschitz: float, bound: float) -> ConsistencyRecord:
    """``L_hat <= bound * 1.15 + 0.02``, the explicit grid-resolution slack."""
    passed = bool(np.isfinite(lipschitz) and lipschitz <= bound * CONSISTENCY_FACTOR + CONSISTENCY_OFFSET)
    return ConsistencyRecord(lipschitz, bound, passed)


def empirical_modulus_consistency(P: Problem, xbar=None, gamma: float = 1.0, cfg: OracleConfig | None = None,
                                  report: OracleReport | None = None, bound: float | None = None) -> ConsistencyRecord:
    """Empirical argmin modulus against the second-order tilt bound."""
    xbar = P.point if xbar is None else np.asarray(xbar, dtype=float)
    report = report or verify_tilt_stability(P, xbar, cfg)
    bound = tilt_bound(P, xbar, gamma) if bound is None else bound
    return compare_modulus(report.lipschitz, bound)
