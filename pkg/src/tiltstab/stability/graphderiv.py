"""Graphical derivative of the subgradient mapping and the sampled RUSOSC probe.

On the optimal face of ``LP(w)`` the quadratic form
``<hess L(x, lam) w, w> = w^T hess g w - c(w) @ lam`` is constant, because the
LP cost ``c(w)`` is exactly minus the constraint part of that form. Both
routines lean on this: one value per direction, no matter which optimal
multiplier realizes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linalg import nullspace
from ..nlpmodel import (
    EmptyMultiplierSet,
    Problem,
    critical_cone,
    evaluate,
    multiplier_set,
    normalized_lp_cost,
    positive_support,
    solve_direction_lp,
    stationarity_residual,
)
from ..polyhedra import LPStatus, truncate_ball
from ..projection import feasible_samples
from ..sampling import halton, sphere_grid
from .verdicts import Status, Verdict

FORM_TOL = 1e-9
TIGHT_TOL = 1e-9


@dataclass
class GraphDerivSet:
    """``{base vectors} + cone(generators)``; ``empty`` for directions outside the critical cone."""

    base_vectors: np.ndarray  # (N, n)
    cone_generators: np.ndarray  # (G, n)
    value: float | None
    multipliers: np.ndarray  # optimal-face vertices, (N, m)
    empty: bool = False
    reason: str | None = None

    def forms(self, w) -> np.ndarray:
        """``<z, w>`` for every base vector ``z``."""
        return self.base_vectors @ np.asarray(w, dtype=float)


def _empty(n: int, m: int, reason: str) -> GraphDerivSet:
    return GraphDerivSet(np.zeros((0, n)), np.zeros((0, n)), None, np.zeros((0, m)), True, reason)


def graphical_derivative(P: Problem, x, v, w) -> GraphDerivSet:
    """``D(subgradient)(x, v)(w)`` through the sum rule and the optimal-face union formula."""
    ev = evaluate(P, x)
    w = np.asarray(w, dtype=float)
    xstar = np.asarray(v, dtype=float) - ev.grad_g
    mset = multiplier_set(P, ev, xstar)
    if mset.empty:
        raise EmptyMultiplierSet("v - grad g(x) is not a normal vector at x")
    K = critical_cone(P, ev, xstar, mset.decomposition.vertices[0])
    if not K.contains(w):
        return _empty(ev.n, ev.m, "w outside the critical cone")
    out = solve_direction_lp(ev, mset, w)
    if out.status is not LPStatus.OPTIMAL:
        return _empty(ev.n, ev.m, "LP(w) unbounded")
    base = np.array([ev.hess_g @ w + ev.constraint_form(lam) @ w for lam in out.face]).reshape(-1, ev.n)
    gens = []
    if len(K.B):
        tight = K.B @ w >= -TIGHT_TOL
        gens.extend(K.B[tight])
    for c in K.C:
        gens.extend([c, -c])
    gens = [g for g in gens if np.abs(g).max() > 0]
    value = float(w @ ev.hess_g @ w - out.value)
    return GraphDerivSet(base, np.array(gens, dtype=float).reshape(len(gens), ev.n), value, out.face)


def _support_subspaces(ev, mset) -> list[tuple[int, ...]]:
    dec = mset.decomposition
    supports = {positive_support(lam, ev.active) for lam in dec.vertices}
    return sorted(supports, key=lambda s: (len(s), s))


def _subspace_directions(ev, support, count: int) -> np.ndarray:
    Z = nullspace(ev.jac_q[list(support)], n=ev.n) if support else np.eye(ev.n)
    d = Z.shape[1]
    if d == 0:
        return np.zeros((0, ev.n))
    if d == 1:
        return np.vstack([Z[:, 0], -Z[:, 0]])
    return sphere_grid(max(count, 4), d) @ Z.T


@dataclass
class _FaceCache:
    radius: float | None
    faces: dict = field(default_factory=dict)

    def vertices(self, mset, cost, opt, face_verts, face_rays) -> np.ndarray:
        key = (tuple(map(tuple, np.round(face_verts, 8))), tuple(map(tuple, np.round(face_rays, 8))))
        if key not in self.faces:
            if self.radius is None:
                self.faces[key] = face_verts
            else:
                poly = mset.polyhedron if not np.any(cost) else mset.polyhedron.with_row(cost, opt)
                self.faces[key] = truncate_ball(poly, self.radius).vertices
        return self.faces[key]


def _probe_pair(P, ev, lam0, v, ell, directions, gamma, xbar):
    xstar = ev.jac_q.T @ lam0 if ev.m else np.zeros(ev.n)
    mset = multiplier_set(P, ev, xstar)
    if mset.empty:
        return None, 0
    dec = mset.decomposition
    V, R = dec.vertices, dec.rays
    cache = _FaceCache(None if gamma is None else gamma * float(np.linalg.norm(xstar)))
    checked = 0
    subspaces = _support_subspaces(ev, mset)
    per = max(4, directions // max(1, len(subspaces)))
    act = list(ev.active)
    for support in subspaces:
        for w in _subspace_directions(ev, support, per):
            cost, _ = normalized_lp_cost(ev, w)
            if len(R) and (R @ cost).min() < -1e-9:
                continue
            vals = V @ cost
            opt = float(vals.min())
            face = V[np.abs(vals - opt) <= 1e-8 * (1 + abs(opt))]
            face_rays = R[np.abs(R @ cost) <= 1e-9] if len(R) else R
            cand = cache.vertices(mset, cost, opt, face, face_rays)
            slack = np.abs(ev.jac_q @ w) if ev.m else np.zeros(0)
            ron = [lam for lam in cand if all(slack[i] <= FORM_TOL * (1 + np.linalg.norm(ev.jac_q[i]))
                                              for i in positive_support(lam, act))]
            if not ron:
                continue
            checked += 1
            lam = ron[0]
            form = float(w @ ev.lagrangian_hessian(lam) @ w)
            if form < ell * (w @ w) - FORM_TOL:
                return {"x": ev.x, "v": v, "lam": lam, "w": w, "form": form, "distance": float(
                    np.sqrt(np.sum((ev.x - xbar) ** 2) + np.sum(v**2)))}, checked
    return None, checked


def check_rusosc_sampled(
    P: Problem,
    xbar=None,
    eta: float = 1e-2,
    ell: float = 1.0,
    budget: int = 200,
    directions: int = 100,
    gamma: float | None = None,
) -> Verdict:
    """Refutation probe for uniform second-order positivity over nearby graph points.

    For feasible ``x`` near ``xbar`` and ``v = grad g(x) + jac q(x)^T lam0`` with
    ``||(x - xbar, v)|| <= eta``, every sampled direction ``w`` that admits an
    ``LP(w)``-optimal multiplier satisfying the equality condition on its
    positive support must give ``<hess L w, w> >= ell ||w||^2``. With ``gamma``
    set, multipliers are restricted to the ball of radius ``gamma ||v - grad g(x)||``.
    """
    if eta <= 0 or ell <= 0:
        raise ValueError("eta and ell must be positive")
    ev0 = evaluate(P, xbar)
    xbar = ev0.x
    pts = np.vstack([xbar, feasible_samples(P, xbar, eta / 2, max(budget - 1, 0))])[:budget]
    H = halton(len(pts), max(P.m, 1))
    pairs = checked = 0
    for x, h in zip(pts, H):
        ev = evaluate(P, x)
        if not ev.feasible:
            continue
        _, lam_star = stationarity_residual(P, ev)
        lam_star = np.maximum(lam_star, 0.0)
        v0 = ev.grad_g + (ev.jac_q.T @ lam_star if ev.m else 0.0)
        room = eta**2 - np.sum((x - xbar) ** 2)
        if v0 @ v0 > room:
            continue
        trials = [(lam_star, v0)]
        if ev.m and ev.active:
            hh = np.zeros(ev.m)
            hh[list(ev.active)] = h[list(ev.active)]
            d = ev.jac_q.T @ hh
            if d @ d > 1e-16:
                # largest delta with ||v0 + delta d||^2 <= room, then halve it
                a, b, c = d @ d, 2 * v0 @ d, v0 @ v0 - room
                delta = 0.5 * (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
                if delta > 0:
                    trials.append((lam_star + delta * hh, v0 + delta * d))
        for lam0, v in trials:
            pairs += 1
            witness, k = _probe_pair(P, ev, lam0, v, ell, directions, gamma, xbar)
            checked += k
            if witness is not None:
                return Verdict(Status.FAILS_WITH_WITNESS, witness=witness,
                               details={"eta": eta, "ell": ell, "pairs": pairs, "directions_checked": checked})
    return Verdict(Status.HOLDS_ON_SAMPLES,
                   details={"eta": eta, "ell": ell, "pairs": pairs, "directions_checked": checked,
                            "gamma": gamma, "budget": budget})
