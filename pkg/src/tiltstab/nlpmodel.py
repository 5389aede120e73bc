"""Inequality-constrained NLP ``min g(x) s.t. q_i(x) <= 0`` and its first/second-order data.

Besides pointwise derivative bundles this module builds the multiplier
polyhedron ``Lambda(x, x*)``, the tangent and critical cones at a feasible
point, and the directional multiplier sets that solve ``LP(v)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import exprcore as ec
from .linalg import nullspace, rank
from .polyhedra import (
    EmptyPolyhedron,
    LPOutcome,
    LPStatus,
    StdPolyhedron,
    VertexRayDecomposition,
    enumerate_vertices_rays,
    lp_solve,
)
from .sampling import halton, sphere_grid

ACTIVE_TOL = 1e-8
POSITIVE_TOL = 1e-8
CONE_TOL = 1e-9


class ModelError(Exception):
    pass


class InfeasiblePoint(ModelError):
    pass


class NotAMultiplier(ModelError):
    pass


class EmptyMultiplierSet(ModelError):
    pass


def _broadcast(value, x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.asarray(value, dtype=float), x.shape[1:]) if x.ndim > 1 else float(value)


@dataclass(frozen=True, eq=False)
class Problem:
    """Parsed problem with precompiled symbolic derivatives."""

    names: tuple[str, ...]
    objective: ec.Expr
    constraints: tuple[ec.Expr, ...]
    point: np.ndarray
    _compiled: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.names)
        point = np.asarray(self.point, dtype=float).reshape(-1)
        if point.shape[0] != n:
            raise ValueError(f"candidate point has {point.shape[0]} entries, expected {n}")
        if not np.all(np.isfinite(point)):
            raise ValueError("candidate point must be finite")
        for e in (self.objective, *self.constraints):
            if ec.max_var_index(e) >= n:
                raise ValueError("expression references an undeclared variable")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        c = self._compiled
        c["g"] = ec.lambdify(self.objective)
        c["dg"] = [ec.lambdify(d) for d in ec.grad(self.objective, n)]
        c["hg"] = [[ec.lambdify(d) for d in row] for row in ec.hessian(self.objective, n)]
        c["q"] = [ec.lambdify(q) for q in self.constraints]
        c["dq"] = [[ec.lambdify(d) for d in ec.grad(q, n)] for q in self.constraints]
        c["hq"] = [[[ec.lambdify(d) for d in row] for row in ec.hessian(q, n)] for q in self.constraints]

    @classmethod
    def from_text(cls, names: Sequence[str], objective: str, constraints: Sequence[str], point) -> "Problem":
        """Build from expression strings; each constraint string ``s`` means ``s <= 0``."""
        names = tuple(names)
        return cls(
            names,
            ec.parse_expr(objective, names),
            tuple(ec.parse_expr(s, names) for s in constraints),
            np.asarray(point, dtype=float),
        )

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def objective_value(self, x):
        return _broadcast(self._compiled["g"](np.asarray(x, dtype=float)), x)

    def constraint_values(self, x) -> np.ndarray:
        """``q(x)``; for an ``(n, N)`` array the result is ``(m, N)``."""
        x = np.asarray(x, dtype=float)
        shape = (self.m,) + x.shape[1:]
        out = np.empty(shape)
        for i, f in enumerate(self._compiled["q"]):
            out[i] = _broadcast(f(x), x)
        return out

    def objective_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([f(x) for f in self._compiled["dg"]], dtype=float)

    def objective_hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([[f(x) for f in row] for row in self._compiled["hg"]], dtype=float)

    def constraint_jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([[f(x) for f in row] for row in self._compiled["dq"]], dtype=float).reshape(self.m, self.n)

    def constraint_hessians(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array(
            [[[f(x) for f in row] for row in h] for h in self._compiled["hq"]], dtype=float
        ).reshape(self.m, self.n, self.n)

    def infeasibility(self, x) -> float:
        q = self.constraint_values(x)
        return float(max(q.max(initial=-np.inf), 0.0)) if self.m else 0.0

    def is_feasible(self, x, tol: float = ACTIVE_TOL) -> bool:
        return self.m == 0 or bool(self.constraint_values(x).max() <= tol)


@dataclass(frozen=True)
class PointEvaluation:
    x: np.ndarray
    g: float
    grad_g: np.ndarray
    hess_g: np.ndarray
    q: np.ndarray
    jac_q: np.ndarray  # (m, n)
    hess_q: np.ndarray  # (m, n, n)
    active: tuple[int, ...]
    feasible: bool

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.q)

    def lagrangian_hessian(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.m == 0:
            return self.hess_g.copy()
        return self.hess_g + np.tensordot(lam, self.hess_q, axes=1)

    def constraint_form(self, lam) -> np.ndarray:
        """Hessian of ``lam^T q`` at ``x``."""
        lam = np.asarray(lam, dtype=float)
        if self.m == 0:
            return np.zeros((self.n, self.n))
        return np.tensordot(lam, self.hess_q, axes=1)

    def active_jacobian(self, indices: Sequence[int] | None = None) -> np.ndarray:
        idx = list(self.active if indices is None else indices)
        return self.jac_q[idx].reshape(len(idx), self.n)


def evaluate(P: Problem, x=None) -> PointEvaluation:
    """All first- and second-order data of ``P`` at ``x`` (default: the candidate point)."""
    x = P.point if x is None else np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != P.n:
        raise ValueError(f"point has {x.shape[0]} entries, expected {P.n}")
    q = P.constraint_values(x) if P.m else np.zeros(0)
    feasible = bool(P.m == 0 or q.max() <= ACTIVE_TOL)
    active = tuple(int(i) for i in np.flatnonzero(q >= -ACTIVE_TOL))
    return PointEvaluation(
        x=x.copy(),
        g=float(P.objective_value(x)),
        grad_g=P.objective_gradient(x),
        hess_g=P.objective_hessian(x),
        q=q,
        jac_q=P.constraint_jacobian(x),
        hess_q=P.constraint_hessians(x),
        active=active,
        feasible=feasible,
    )


def _ev(P: Problem, x) -> PointEvaluation:
    return x if isinstance(x, PointEvaluation) else evaluate(P, x)


def stationarity_residual(P: Problem, x=None) -> tuple[float, np.ndarray]:
    """``min ||grad g(x) + jac q(x)^T lam||_inf`` over admissible multipliers.

    Returns the residual and a minimizing multiplier. Solved as one LP with
    an epigraph variable for the infinity norm.
    """
    ev = _ev(P, x if x is not None else P.point)
    if not ev.feasible:
        raise InfeasiblePoint(f"max constraint value {ev.q.max():.3g} exceeds {ACTIVE_TOL}")
    n, m = ev.n, ev.m
    if m == 0:
        return float(np.abs(ev.grad_g).max(initial=0.0)), np.zeros(0)
    J = ev.jac_q.T  # (n, m)
    # columns: lam (m), s, sigma (n), sigma' (n)
    cols = m + 1 + 2 * n
    rows = []
    rhs = []
    for j in range(n):
        r = np.zeros(cols)
        r[:m], r[m], r[m + 1 + j] = J[j], -1.0, 1.0
        rows.append(r)
        rhs.append(-ev.grad_g[j])
        r = np.zeros(cols)
        r[:m], r[m], r[m + 1 + n + j] = -J[j], -1.0, 1.0
        rows.append(r)
        rhs.append(ev.grad_g[j])
    for i in range(m):
        if i not in ev.active:
            r = np.zeros(cols)
            r[i] = 1.0
            rows.append(r)
            rhs.append(0.0)
    cost = np.zeros(cols)
    cost[m] = 1.0
    out = lp_solve(StdPolyhedron(np.array(rows), np.array(rhs)), cost, with_face=False)
    lam = out.vertex[:m]
    return float(np.abs(ev.grad_g + J @ lam).max()), lam


@dataclass
class MultiplierSet:
    polyhedron: StdPolyhedron
    decomposition: VertexRayDecomposition | None
    x: np.ndarray
    xstar: np.ndarray

    @property
    def empty(self) -> bool:
        return self.decomposition is None


def multiplier_polyhedron(ev: PointEvaluation, xstar) -> StdPolyhedron:
    xstar = np.asarray(xstar, dtype=float).reshape(-1)
    m = ev.m
    pins = np.eye(m)[[i for i in range(m) if i not in ev.active]]
    A = np.vstack([ev.jac_q.T.reshape(ev.n, m), pins])
    b = np.concatenate([xstar, np.zeros(len(pins))])
    return StdPolyhedron(A, b)


def multiplier_set(P: Problem, x, xstar) -> MultiplierSet:
    """``Lambda(x, x*)`` with its vertices and rays attached (empty set allowed)."""
    ev = _ev(P, x)
    if not ev.feasible:
        raise InfeasiblePoint("multiplier sets are defined at feasible points")
    poly = multiplier_polyhedron(ev, xstar)
    try:
        dec = enumerate_vertices_rays(poly)
    except EmptyPolyhedron:
        dec = None
    return MultiplierSet(poly, dec, ev.x.copy(), np.asarray(xstar, dtype=float).reshape(-1))


@dataclass
class ConeRep:
    """Polyhedral cone ``{w : B w <= 0, C w = 0}`` in ``R^n``."""

    B: np.ndarray
    C: np.ndarray
    n: int

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float).reshape(-1, self.n)
        self.C = np.asarray(self.C, dtype=float).reshape(-1, self.n)

    def contains(self, w, tol: float = CONE_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        if len(self.B) and (self.B @ w).max() > tol:
            return False
        if len(self.C) and np.abs(self.C @ w).max() > tol:
            return False
        return True

    def generators(self) -> tuple[np.ndarray, np.ndarray]:
        """Extreme rays of the pointed part and an orthonormal lineality basis.

        The cone equals ``cone(rays) + span(lineality)``.
        """
        n = self.n
        N = nullspace(self.C, n=n) if len(self.C) else np.eye(n)
        d = N.shape[1]
        if d == 0:
            return np.zeros((0, n)), np.zeros((0, n))
        M = self.B @ N if len(self.B) else np.zeros((0, d))
        L = nullspace(M, n=d) if len(M) else np.eye(d)
        lineality = (N @ L).T
        if L.shape[1] == d:
            return np.zeros((0, n)), lineality
        # Orthonormal complement of the lineality space inside R^d.
        Q = nullspace(L.T, n=d) if L.shape[1] else np.eye(d)
        MQ = M @ Q
        e = Q.shape[1]
        rays: list[np.ndarray] = []
        for S in itertools.combinations(range(len(MQ)), e - 1):
            sub = MQ[list(S)].reshape(len(S), e)
            if len(S) and rank(sub) != e - 1:
                continue
            u = nullspace(sub, n=e)
            if u.shape[1] != 1:
                continue
            for sign in (1.0, -1.0):
                cand = sign * u[:, 0]
                if (MQ @ cand).max(initial=-np.inf) <= CONE_TOL * 10:
                    w = N @ Q @ cand
                    w /= np.linalg.norm(w)
                    if not any(np.allclose(w, r, atol=1e-9) for r in rays):
                        rays.append(w)
        rays.sort(key=lambda r: tuple(np.round(r, 9)))
        return np.array(rays).reshape(-1, n), lineality

    def is_trivial(self) -> bool:
        rays, lin = self.generators()
        return len(rays) == 0 and len(lin) == 0

    def sample_directions(self, count: int) -> np.ndarray:
        """Deterministic unit directions in the cone.

        Generators first, then nonnegative Halton combinations of the
        generators, then sphere-grid points that pass the membership test.
        """
        rays, lin = self.generators()
        gens = [*rays, *lin, *(-lin)]
        if not gens:
            return np.zeros((0, self.n))
        G = np.array(gens)
        out = [g / np.linalg.norm(g) for g in G]
        if len(G) > 1 and count > 0:
            W = halton(count, len(G))
            for w in W:
                v = w @ G
                nv = np.linalg.norm(v)
                if nv > 1e-9:
                    out.append(v / nv)
        for s in sphere_grid(max(count, 8), self.n):
            if self.contains(s):
                out.append(s)
        return np.array(out)


def tangent_cone(P: Problem, x) -> ConeRep:
    """Linearized tangent cone ``{u : <grad q_i(x), u> <= 0, i active}``."""
    ev = _ev(P, x)
    return ConeRep(ev.active_jacobian(), np.zeros((0, ev.n)), ev.n)


def positive_support(lam, active: Sequence[int]) -> tuple[int, ...]:
    lam = np.asarray(lam, dtype=float)
    return tuple(i for i in active if lam[i] > POSITIVE_TOL)


def critical_cone(P: Problem, x, xstar, lam_ref) -> ConeRep:
    """Critical cone ``K(x, x*)`` written through one multiplier ``lam_ref``."""
    ev = _ev(P, x)
    lam_ref = np.asarray(lam_ref, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    resid = np.abs(ev.jac_q.T.reshape(ev.n, ev.m) @ lam_ref - xstar).max(initial=0.0)
    inactive = [i for i in range(ev.m) if i not in ev.active]
    if resid > 1e-8 or np.any(lam_ref < -1e-8) or np.any(np.abs(lam_ref[inactive]) > 1e-8):
        raise NotAMultiplier(f"residual {resid:.3g}")
    plus = positive_support(lam_ref, ev.active)
    rest = [i for i in ev.active if i not in plus]
    return ConeRep(ev.active_jacobian(rest), ev.active_jacobian(plus), ev.n)


def lp_cost(ev: PointEvaluation, v) -> np.ndarray:
    """Cost of ``LP(v)``: ``-v^T hess q_i(x) v`` on active indices, 0 on pinned ones."""
    v = np.asarray(v, dtype=float)
    c = np.zeros(ev.m)
    for i in ev.active:
        c[i] = -v @ ev.hess_q[i] @ v
    return c


def normalized_lp_cost(ev: PointEvaluation, v) -> tuple[np.ndarray, float]:
    """``lp_cost`` scaled to unit max-norm, with the scale; ``v`` and ``t v`` give the same cost."""
    c = lp_cost(ev, v)
    s = float(np.abs(c).max(initial=0.0))
    return (c / s, s) if s > 0 else (c, 1.0)


def solve_direction_lp(ev: PointEvaluation, mset: MultiplierSet, v) -> LPOutcome:
    """``LP(v)`` on the normalized cost; the reported value is for the unscaled cost."""
    c, s = normalized_lp_cost(ev, v)
    out = lp_solve(mset.polyhedron, c, decomposition=mset.decomposition)
    if out.value is not None:
        out.value *= s
    return out


def directional_multipliers(P: Problem, x, xstar, v, mset: MultiplierSet | None = None) -> LPOutcome:
    """Solve ``LP(v)`` over ``Lambda(x, x*)``; the outcome's face is ``Lambda(x, x*; v)``."""
    ev = _ev(P, x)
    mset = mset or multiplier_set(P, ev, xstar)
    if mset.empty:
        raise EmptyMultiplierSet("Lambda(x, x*) is empty")
    return solve_direction_lp(ev, mset, v)


def optimal_face(mset: MultiplierSet, outcome: LPOutcome, cost) -> StdPolyhedron | None:
    """The optimal face of an LP over ``mset`` as a polyhedron (``None`` if unbounded)."""
    if outcome.status is not LPStatus.OPTIMAL:
        return None
    cost = np.asarray(cost, dtype=float)
    if not np.any(cost):
        return mset.polyhedron
    return mset.polyhedron.with_row(cost, outcome.value)


STATIONARITY_TOL = 1e-8


class NotStationary(ModelError):
    def __init__(self, residual: float):
        super().__init__(f"stationarity residual {residual:.3g} exceeds {STATIONARITY_TOL}")
        self.residual = residual


def require_stationary(P: Problem, x=None) -> np.ndarray:
    """A KKT multiplier at ``x``; raises ``NotStationary`` when none exists."""
    res, lam = stationarity_residual(P, x)
    if res > STATIONARITY_TOL:
        raise NotStationary(res)
    return lam
