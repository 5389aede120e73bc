"""Second-order tilt-stability conditions at a stationary point.

Every condition reduces to minimum eigenvalues of reduced Lagrangian Hessians
``Z^T hess L(xbar, lam) Z`` with ``Z`` spanning the nullspace of the gradients
indexed by ``I+(lam)``. On a polyhedral face ``I+`` is constant on the
relative interior and the Hessian is affine in ``lam``, so vertices (and rays)
of the relevant faces carry all the information.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..linalg import nullspace, reduced_hessian, sym_eigs
from ..nlpmodel import (
    MultiplierSet,
    PointEvaluation,
    Problem,
    critical_cone,
    evaluate,
    lp_cost,
    multiplier_set,
    optimal_face,
    positive_support,
    require_stationary,
    solve_direction_lp,
)
from ..polyhedra import LPStatus, truncate_ball
from .cq import check_mfcq
from .verdicts import SAMPLED_DELTA, Status, Verdict

PD_TOL = 1e-9
ZERO_EIG = 1e-12
DEFAULT_DIRECTIONS = 500


@dataclass
class ReducedEig:
    """Minimum eigenvalue of the reduced Hessian at one multiplier."""

    lam: np.ndarray
    support: tuple[int, ...]
    value: float  # +inf when the nullspace is trivial
    w: np.ndarray | None  # unit eigenvector in R^n


def reduced_min_eig(ev: PointEvaluation, lam, support=None, H=None) -> ReducedEig:
    lam = np.asarray(lam, dtype=float)
    support = positive_support(lam, ev.active) if support is None else tuple(support)
    Z = nullspace(ev.jac_q[list(support)], n=ev.n) if support else np.eye(ev.n)
    if Z.shape[1] == 0:
        return ReducedEig(lam, support, float("inf"), None)
    H = ev.lagrangian_hessian(lam) if H is None else H
    vals, vecs = sym_eigs(reduced_hessian(H, Z))
    w = Z @ vecs[:, 0]
    return ReducedEig(lam, support, float(vals[0]), w / np.linalg.norm(w))


@dataclass
class DeltaSet:
    """Finite vertex description of the truncated directional multiplier union."""

    vertices: np.ndarray  # (N, m)
    gamma: float
    radius: float
    norm: str
    exact: bool
    directions: int
    degenerate: bool = False
    faces: int = 0
    truncated: bool = True

    @property
    def empty(self) -> bool:
        return len(self.vertices) == 0


def _dedup_rows(rows: list[np.ndarray], m: int, tol: float = 1e-7) -> np.ndarray:
    out: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - s), initial=0.0) <= tol for s in out):
            out.append(r)
    out.sort(key=lambda r: tuple(np.round(r, 9)))
    return np.array(out, dtype=float).reshape(len(out), m)


def _face_key(outcome) -> tuple:
    verts = sorted(tuple(np.round(v, 8)) for v in outcome.face)
    rays = sorted(tuple(np.round(r, 8)) for r in outcome.face_rays)
    return tuple(verts), tuple(rays)


def _stationary_setup(P: Problem, xbar):
    ev = evaluate(P, xbar)
    lam0 = require_stationary(P, ev)
    xstar = -ev.grad_g
    mset = multiplier_set(P, ev, xstar)
    return ev, lam0, xstar, mset


def _directional_faces(ev, lam0, xstar, mset: MultiplierSet, directions: int, P: Problem):
    """Distinct optimal faces of ``LP(v)`` over sampled ``v`` in the critical cone.

    Yields ``(face_polyhedron, outcome)`` pairs; also returns how many
    directions were used and whether the face list is exhaustive.
    """
    K = critical_cone(P, ev, xstar, lam0)
    dirs = K.sample_directions(directions)
    if len(dirs) == 0:
        return [], 0, True
    constant_cost = all(not np.any(ev.hess_q[i]) for i in ev.active)
    faces, seen = [], set()
    for v in dirs:
        cost = lp_cost(ev, v)
        out = solve_direction_lp(ev, mset, v)
        if out.status is not LPStatus.OPTIMAL:
            continue
        key = _face_key(out)
        if key in seen:
            continue
        seen.add(key)
        faces.append((optimal_face(mset, out, cost), out))
        if constant_cost:
            break
    return faces, len(dirs), constant_cost


def build_delta(
    P: Problem,
    xbar=None,
    gamma: float = 1.0,
    directions: int = DEFAULT_DIRECTIONS,
    norm: str = "inf",
    truncate: bool = True,
) -> DeltaSet:
    """Vertices of the union of ``LP(v)`` optimal faces over ``v`` in ``K(xbar, -grad g)``,
    each intersected with the ball of radius ``gamma * ||grad g(xbar)||``.

    ``truncate=False`` keeps the untruncated optimal-face vertices instead.
    """
    ev, lam0, xstar, mset = _stationary_setup(P, xbar)
    radius = gamma * float(np.linalg.norm(ev.grad_g)) if truncate else float("inf")
    faces, used, exhaustive = _directional_faces(ev, lam0, xstar, mset, directions, P)
    rows: list[np.ndarray] = []
    for poly, out in faces:
        if not truncate:
            rows.extend(out.face)
            continue
        dec = truncate_ball(poly, radius, norm)
        rows.extend(dec.vertices)
    return DeltaSet(
        vertices=_dedup_rows(rows, ev.m),
        gamma=gamma,
        radius=radius,
        norm=norm,
        exact=exhaustive,
        directions=used,
        degenerate=truncate and radius == 0.0,
        faces=len(faces),
        truncated=truncate,
    )


def _delta(P, xbar, gamma, delta, directions):
    return delta if delta is not None else build_delta(P, xbar, gamma, directions)


def _vertex_eigs(P, xbar, delta: DeltaSet) -> list[ReducedEig]:
    ev = evaluate(P, xbar)
    return [reduced_min_eig(ev, lam) for lam in delta.vertices]


def _delta_details(delta: DeltaSet, eigs: list[ReducedEig]) -> dict:
    finite = [e.value for e in eigs if np.isfinite(e.value)]
    return {
        "delta_vertices": len(delta.vertices),
        "delta_exact": delta.exact,
        "min_reduced_eig": min(finite) if finite else float("inf"),
        "vertex_eigs": [e.value for e in eigs],
    }


def _threshold_verdict(eigs, delta: DeltaSet, threshold: float) -> Verdict:
    qualifier = None if delta.exact else SAMPLED_DELTA
    details = _delta_details(delta, eigs)
    for e in eigs:
        if e.value <= threshold + PD_TOL:
            return Verdict(Status.FAILS, witness={"lam": e.lam, "w": e.w, "value": e.value}, details=details, qualifier=qualifier)
    if delta.empty or all(not np.isfinite(e.value) for e in eigs):
        details["vacuous"] = True
    return Verdict(Status.HOLDS, details=details, qualifier=qualifier)


def check_pointbased(P: Problem, xbar=None, gamma: float = 1.0, kappa: float = 1.0, delta: DeltaSet | None = None,
                     directions: int = DEFAULT_DIRECTIONS) -> Verdict:
    """Reduced Hessians exceed ``1/kappa`` at every multiplier of the truncated set."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    delta = _delta(P, xbar, gamma, delta, directions)
    v = _threshold_verdict(_vertex_eigs(P, xbar, delta), delta, 1.0 / kappa)
    v.details["kappa"] = kappa
    return v


def tilt_bound(P: Problem, xbar=None, gamma: float = 1.0, delta: DeltaSet | None = None,
               directions: int = DEFAULT_DIRECTIONS) -> float:
    """Sup of ``||w||^2 / <hess L w, w>`` over the truncated multiplier set (``0/0 := 0``)."""
    delta = _delta(P, xbar, gamma, delta, directions)
    bound = 0.0
    for e in _vertex_eigs(P, xbar, delta):
        if not np.isfinite(e.value):
            continue
        if e.value <= ZERO_EIG:
            return float("inf")
        bound = max(bound, 1.0 / e.value)
    return bound


def check_kappa_free(P: Problem, xbar=None, gamma: float = 1.0, delta: DeltaSet | None = None,
                     directions: int = DEFAULT_DIRECTIONS) -> Verdict:
    """Positive definiteness on the truncated multiplier set; reports ``ell`` and modulus ``1/ell``."""
    delta = _delta(P, xbar, gamma, delta, directions)
    eigs = _vertex_eigs(P, xbar, delta)
    v = _threshold_verdict(eigs, delta, 0.0)
    ell = v.details["min_reduced_eig"]
    v.details["ell"] = ell
    v.details["modulus"] = 0.0 if not np.isfinite(ell) else (1.0 / ell if ell > 0 else float("inf"))
    return v


def check_extreme_point_variant(P: Problem, xbar=None, kappa: float = 1.0,
                                directions: int = DEFAULT_DIRECTIONS) -> Verdict:
    """Threshold ``1/kappa`` on untruncated optimal-face vertices; requires MFCQ."""
    ev = evaluate(P, xbar)
    if not check_mfcq(ev).holds:
        return Verdict.not_applicable("mfcq")
    delta = build_delta(P, ev.x, gamma=float("inf"), directions=directions, truncate=False)
    v = _threshold_verdict(_vertex_eigs(P, ev.x, delta), delta, 1.0 / kappa)
    v.details["kappa"] = kappa
    return v


def _faces_by_zero_pattern(mset: MultiplierSet, active: tuple[int, ...]):
    """Faces of ``Lambda`` as (vertex indices, ray indices), one per distinct zero pattern."""
    dec = mset.decomposition
    V, R = dec.vertices, dec.rays
    seen = set()
    for k in range(len(active) + 1):
        for Zs in itertools.combinations(active, k):
            zs = list(Zs)
            vi = tuple(i for i, v in enumerate(V) if np.all(np.abs(v[zs]) <= 1e-8))
            if not vi:
                continue
            ri = tuple(i for i, r in enumerate(R) if np.all(np.abs(r[zs]) <= 1e-8))
            if (vi, ri) in seen:
                continue
            seen.add((vi, ri))
            yield vi, ri


def check_ssosc(P: Problem, xbar=None) -> Verdict:
    """Positive definiteness on ``{w : <grad q_i, w> = 0, i in I+(lam)}`` for all ``lam`` in ``Lambda``.

    Each face passes when its vertices give positive definite reduced Hessians,
    its rays give positive semidefinite constraint-Hessian forms, and vertex
    Hessians stay definite on the kernels of those ray forms.
    """
    ev, _, _, mset = _stationary_setup(P, xbar)
    dec = mset.decomposition
    V, R = dec.vertices, dec.rays
    faces = 0
    min_eig = float("inf")
    for vi, ri in _faces_by_zero_pattern(mset, ev.active):
        faces += 1
        members = [V[i] for i in vi] + [R[i] for i in ri]
        support = tuple(i for i in ev.active if any(abs(p[i]) > 1e-8 for p in members))
        Z = nullspace(ev.jac_q[list(support)], n=ev.n) if support else np.eye(ev.n)
        if Z.shape[1] == 0:
            continue
        for i in vi:
            vals, vecs = sym_eigs(reduced_hessian(ev.lagrangian_hessian(V[i]), Z))
            min_eig = min(min_eig, float(vals[0]))
            if vals[0] <= PD_TOL:
                w = Z @ vecs[:, 0]
                return Verdict(Status.FAILS, witness={"lam": V[i], "w": w / np.linalg.norm(w), "value": float(vals[0])},
                               details={"faces": faces})
        for j in ri:
            vals, vecs = sym_eigs(reduced_hessian(ev.constraint_form(R[j]), Z))
            if vals[0] < -PD_TOL:
                w = Z @ vecs[:, 0]
                w /= np.linalg.norm(w)
                v0 = V[vi[0]]
                a = float(w @ ev.lagrangian_hessian(v0) @ w)
                b = float(w @ ev.constraint_form(R[j]) @ w)
                t = max(a, 0.0) / -b + 1.0
                lam = v0 + t * R[j]
                return Verdict(Status.FAILS, witness={"lam": lam, "w": w, "value": float(w @ ev.lagrangian_hessian(lam) @ w)},
                               details={"faces": faces})
            kernel = vecs[:, np.abs(vals) <= PD_TOL]
            if kernel.shape[1]:
                Zk = Z @ kernel
                for i in vi:
                    kv, kvec = sym_eigs(reduced_hessian(ev.lagrangian_hessian(V[i]), Zk))
                    if kv[0] <= PD_TOL:
                        w = Zk @ kvec[:, 0]
                        return Verdict(Status.FAILS, witness={"lam": V[i], "w": w / np.linalg.norm(w), "value": float(kv[0])},
                                       details={"faces": faces})
    return Verdict(Status.HOLDS, details={"faces": faces, "min_reduced_eig": min_eig})


@dataclass
class SecondOrderReport:
    ssosc: Verdict
    pointbased: Verdict
    kappa_free: Verdict
    extreme_point: Verdict
    rusosc: Verdict
    tilt_bound: float
    delta: DeltaSet | None = None
    sampling: dict = field(default_factory=dict)
