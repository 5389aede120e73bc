"""Standard-form polyhedra ``{lam >= 0 : A lam = b}``.

Provides a two-phase primal simplex (Bland's rule), exhaustive enumeration of
basic feasible solutions and extreme rays, and exact box truncation. Column
counts stay small (multiplier vectors), so enumeration over bases is viable.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import rank, rref

MAX_COLUMNS = 16
FEAS_TOL = 1e-9
DEDUP_TOL = 1e-7


class PolyhedronError(Exception):
    pass


class TooManyColumns(PolyhedronError):
    pass


class EmptyPolyhedron(PolyhedronError):
    pass


class NegativeRadius(PolyhedronError, ValueError):
    pass


@dataclass(frozen=True)
class StdPolyhedron:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim == 1:
            A = A.reshape(len(b), -1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(A)):
            raise ValueError("polyhedron data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def with_row(self, row, rhs: float) -> "StdPolyhedron":
        return StdPolyhedron(np.vstack([self.A, np.reshape(row, (1, -1))]), np.append(self.b, rhs))


@dataclass
class VertexRayDecomposition:
    vertices: np.ndarray  # (N, m)
    rays: np.ndarray  # (R, m), unit infinity norm
    norm: str | None = None
    radius: float | None = None
    over_approximated: bool = False

    @property
    def empty(self) -> bool:
        return len(self.vertices) == 0

    @property
    def bounded(self) -> bool:
        return len(self.rays) == 0


class LPStatus(enum.Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"


@dataclass
class LPOutcome:
    status: LPStatus
    value: float | None = None
    vertex: np.ndarray | None = None
    face: np.ndarray | None = field(default=None)  # optimal-face vertices, (N, m)
    face_rays: np.ndarray | None = field(default=None)  # rays r of P with c @ r = 0


# -- simplex ------------------------------------------------------------------


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    for i in range(T.shape[0]):
        if i != r and T[i, c] != 0.0:
            T[i] -= T[i, c] * T[r]


def _simplex(T, basis, cost, allowed, tol=FEAS_TOL, max_iter=10_000) -> bool:
    """Run Bland-rule pivots on tableau ``T``; False means unbounded."""
    for _ in range(max_iter):
        reduced = cost[:-1] - cost[basis] @ T[:, :-1]
        entering = next((j for j in allowed if reduced[j] < -tol), None)
        if entering is None:
            return True
        col = T[:, entering]
        rows = [i for i in range(T.shape[0]) if col[i] > tol]
        if not rows:
            return False
        ratios = [T[i, -1] / col[i] for i in rows]
        best = min(ratios)
        ties = [i for i, q in zip(rows, ratios) if q <= best + tol * (1.0 + abs(best))]
        leave = min(ties, key=lambda i: basis[i])
        _pivot(T, leave, entering)
        basis[leave] = entering
    raise RuntimeError("simplex iteration limit reached")


def lp_solve(
    P: StdPolyhedron,
    c,
    with_face: bool = True,
    decomposition: VertexRayDecomposition | None = None,
) -> LPOutcome:
    """Minimize ``c @ lam`` over ``P`` by two-phase simplex with Bland's rule.

    When optimal and ``with_face`` is set, the outcome also lists every vertex
    of ``P`` on the optimal face (by enumeration, or from ``decomposition``).
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    A, b = P.A.copy(), P.b.copy()
    k, m = A.shape
    if c.shape[0] != m:
        raise ValueError("cost vector length differs from column count")

    nonzero = np.abs(A).max(axis=1) > 0 if m else np.zeros(k, dtype=bool)
    if np.any(np.abs(b[~nonzero]) > FEAS_TOL):
        return LPOutcome(LPStatus.INFEASIBLE)
    A, b = A[nonzero], b[nonzero]
    k = A.shape[0]
    if m == 0:
        return _finish(P, c, np.zeros(0), with_face, decomposition)

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    T = np.hstack([A, np.eye(k), b.reshape(-1, 1)])
    basis = list(range(m, m + k))

    phase1 = np.zeros(m + k + 1)
    phase1[m : m + k] = 1.0
    _simplex(T, basis, phase1, list(range(m + k)))
    if T[:, -1] @ phase1[basis] > FEAS_TOL:
        return LPOutcome(LPStatus.INFEASIBLE)

    # Drive remaining artificials out of the basis; drop redundant rows.
    keep = []
    for i in range(k):
        if basis[i] >= m:
            cand = [j for j in range(m) if abs(T[i, j]) > FEAS_TOL]
            if cand:
                _pivot(T, i, cand[0])
                basis[i] = cand[0]
                keep.append(i)
        else:
            keep.append(i)
    T = np.hstack([T[keep][:, :m], T[keep][:, -1:]])
    basis = [basis[i] for i in keep]

    cost = np.append(c, 0.0)
    if not _simplex(T, basis, cost, list(range(m))):
        return LPOutcome(LPStatus.UNBOUNDED)
    x = np.zeros(m)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    x[np.abs(x) < 1e-13] = 0.0
    return _finish(P, c, x, with_face, decomposition)


def _finish(P, c, x, with_face, decomposition) -> LPOutcome:
    value = float(c @ x)
    face = face_rays = None
    if with_face:
        try:
            dec = decomposition or enumerate_vertices_rays(P)
        except TooManyColumns:
            face = x.reshape(1, -1)
        else:
            V = dec.vertices
            vals = V @ c if len(V) else np.zeros(0)
            opt = float(vals.min()) if len(V) else value
            value = min(value, opt)
            face = V[np.abs(vals - value) <= 1e-8 * (1.0 + abs(value))]
            R = dec.rays
            face_rays = R[np.abs(R @ c) <= 1e-9] if len(R) else R
    return LPOutcome(LPStatus.OPTIMAL, value, x, face, face_rays)


# -- enumeration --------------------------------------------------------------


def _pinned_columns(A: np.ndarray, b: np.ndarray) -> tuple[list[int], np.ndarray]:
    """Columns forced to zero by rows ``a * lam_i = 0``; returns them and the other rows."""
    pinned = []
    other = []
    for r in range(A.shape[0]):
        nz = np.flatnonzero(np.abs(A[r]) > 0)
        if len(nz) == 1 and abs(b[r]) <= FEAS_TOL:
            pinned.append(int(nz[0]))
        else:
            other.append(r)
    return sorted(set(pinned)), np.array(other, dtype=int)


def _dedup(points: list[np.ndarray], m: int) -> np.ndarray:
    unique: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - u)) <= DEDUP_TOL for u in unique):
            unique.append(p)
    unique.sort(key=lambda p: tuple(np.round(p, 9)))
    return np.array(unique, dtype=float).reshape(len(unique), m)


def _basic_solutions(A: np.ndarray, b: np.ndarray, upper: float | None = None) -> np.ndarray:
    """All basic feasible solutions of ``{A x = b, 0 <= x (<= upper)}``."""
    m = A.shape[1]
    pinned, rows = _pinned_columns(A, b)
    free = [j for j in range(m) if j not in pinned]
    A_f = A[np.ix_(rows, free)] if len(rows) else np.zeros((0, len(free)))
    b_f = b[rows] if len(rows) else np.zeros(0)

    if A_f.shape[0]:
        _, piv_cols, piv_rows = rref(A_f)
        r = len(piv_cols)
        if rank(np.hstack([A_f, b_f.reshape(-1, 1)])) > r:
            return np.zeros((0, m))
        A_r, b_r = A_f[piv_rows], b_f[piv_rows]
    else:
        r = 0
        A_r, b_r = np.zeros((0, len(free))), np.zeros(0)

    scale = 1.0 + np.abs(b_f).max(initial=0.0) + (upper or 0.0) * np.abs(A_f).max(initial=0.0)
    found = []
    for S in itertools.combinations(range(len(free)), r):
        B = A_r[:, S]
        if r and rank(B) < r:
            continue
        N = [j for j in range(len(free)) if j not in S]
        levels = [(0.0,)] * len(N) if upper is None else [(0.0, upper)] * len(N)
        for assign in itertools.product(*levels):
            x = np.zeros(len(free))
            x[N] = assign
            if r:
                x[list(S)] = np.linalg.solve(B, b_r - A_r[:, N] @ x[N])
            if np.any(x < -FEAS_TOL):
                continue
            if upper is not None and np.any(x > upper + FEAS_TOL):
                continue
            if A_f.shape[0] and np.max(np.abs(A_f @ x - b_f)) > 1e-8 * scale:
                continue
            x = np.clip(x, 0.0, upper if upper is not None else None)
            x[np.abs(x) < 1e-13] = 0.0
            full = np.zeros(m)
            full[free] = x
            found.append(full)
    return _dedup(found, m)


def enumerate_vertices_rays(P: StdPolyhedron) -> VertexRayDecomposition:
    """Vertices (basic feasible solutions) and extreme rays of ``P``."""
    m = P.dim
    if m > MAX_COLUMNS:
        raise TooManyColumns(f"{m} columns exceeds the enumeration limit {MAX_COLUMNS}")
    V = _basic_solutions(P.A, P.b)
    if len(V) == 0:
        raise EmptyPolyhedron("no basic feasible solution")
    R = np.zeros((0, m))
    if m:
        # Extreme rays of {A r = 0, r >= 0} are the vertices of its slice sum(r) = 1.
        A_ray = np.vstack([P.A, np.ones((1, m))])
        b_ray = np.append(np.zeros(P.A.shape[0]), 1.0)
        R = _basic_solutions(A_ray, b_ray)
        if len(R):
            R = R / np.abs(R).max(axis=1, keepdims=True)
            R = _dedup(list(R), m)
    return VertexRayDecomposition(V, R)


def truncate_ball(P: StdPolyhedron, radius: float, norm: str = "inf") -> VertexRayDecomposition:
    """Vertices of ``P`` intersected with a norm ball around the origin.

    The infinity-norm case is exact (bounded-variable basic solutions). The
    2-norm case keeps the infinity-box vertices inside the Euclidean ball and
    marks the result as an approximation.
    """
    if radius < 0:
        raise NegativeRadius(f"radius {radius} < 0")
    if norm not in ("inf", "2"):
        raise ValueError(f"unsupported norm {norm!r}")
    m = P.dim
    if m > MAX_COLUMNS:
        raise TooManyColumns(f"{m} columns exceeds the enumeration limit {MAX_COLUMNS}")
    V = _basic_solutions(P.A, P.b, upper=float(radius))
    approx = False
    if norm == "2":
        V = V[np.linalg.norm(V, axis=1) <= radius * (1 + 1e-12)] if len(V) else V
        approx = True
    return VertexRayDecomposition(V, np.zeros((0, m)), norm=norm, radius=float(radius), over_approximated=approx)


def contains(P, lam, tol: float = 1e-8) -> bool:
    """Membership of ``lam`` in a polyhedron or in ``conv(vertices) + cone(rays)``."""
    lam = np.asarray(lam, dtype=float)
    if isinstance(P, StdPolyhedron):
        if np.any(lam < -tol):
            return False
        if P.A.shape[0] == 0:
            return True
        return bool(np.max(np.abs(P.A @ lam - P.b)) <= tol)
    V, R = P.vertices, P.rays
    if len(V) == 0:
        return False
    m = len(lam)
    # Find mu, nu >= 0 with V^T mu + R^T nu = lam, sum(mu) = 1.
    cols = np.hstack([V.T, R.T]) if len(R) else V.T
    A = np.vstack([cols, np.concatenate([np.ones(len(V)), np.zeros(len(R))])])
    b = np.append(lam, 1.0)
    out = lp_solve(StdPolyhedron(A, b), np.zeros(A.shape[1]), with_face=False)
    if out.status is not LPStatus.OPTIMAL:
        return False
    return bool(np.max(np.abs(A[:m] @ out.vertex - lam)) <= tol * (1 + np.abs(lam).max(initial=0)))
