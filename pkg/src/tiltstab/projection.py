"""Nearest feasible points and feasible samples near a reference point.

The feasible set ``{q <= 0}`` is often thin (equality pairs, unions of axes),
so grid candidates alone rarely land on it. A local SLSQP solve on
``min ||y - x||^2 s.t. q(y) <= 0`` does the real work; grid search and a
coordinate polish only ever improve on it, and every accepted point is
re-checked for feasibility.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np
from scipy.optimize import minimize

from .nlpmodel import ACTIVE_TOL, Problem
from .sampling import ball_points, dyadic_axis_points

_GRID_CACHE: dict[int, np.ndarray] = {}


def _unit_grid(n: int, per_axis: int = 5) -> np.ndarray:
    if n not in _GRID_CACHE:
        ticks = np.linspace(-1.0, 1.0, per_axis)
        pts = np.array(list(itertools.product(ticks, repeat=n))) if n <= 4 else np.zeros((0, n))
        _GRID_CACHE[n] = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0 + 1e-12] if len(pts) else pts
    return _GRID_CACHE[n]


def _slsqp_project(P: Problem, x: np.ndarray, start: np.ndarray) -> np.ndarray | None:
    cons = {
        "type": "ineq",
        "fun": lambda y: -P.constraint_values(y),
        "jac": lambda y: -P.constraint_jacobian(y),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            lambda y: 0.5 * np.sum((y - x) ** 2),
            start,
            jac=lambda y: y - x,
            constraints=[cons],
            method="SLSQP",
            options={"maxiter": 200, "ftol": 1e-14},
        )
    y = np.asarray(res.x, dtype=float)
    if not np.all(np.isfinite(y)) or not P.is_feasible(y):
        return None
    return y


def _polish(P: Problem, x: np.ndarray, y: np.ndarray, step: float, tol: float = 1e-6) -> np.ndarray:
    n = len(x)
    dirs = np.vstack([np.eye(n), -np.eye(n)])
    best = np.linalg.norm(y - x)
    while step >= tol:
        moved = False
        for d in dirs:
            cand = y + step * d
            dist = np.linalg.norm(cand - x)
            if dist < best and P.is_feasible(cand):
                y, best, moved = cand, dist, True
        if not moved:
            step *= 0.5
    return y


def nearest_feasible(P: Problem, x, anchor=None) -> tuple[float, np.ndarray]:
    """Estimated ``d(x; feasible set)`` and the feasible point attaining it.

    ``anchor`` must be feasible (default: the candidate point); it bounds the
    estimate from above.
    """
    x = np.asarray(x, dtype=float)
    if P.is_feasible(x):
        return 0.0, x.copy()
    anchor = P.point if anchor is None else np.asarray(anchor, dtype=float)
    best_y = anchor.copy()
    best = float(np.linalg.norm(x - anchor))
    if best == 0.0:
        return best, best_y

    grid = x[:, None] + best * _unit_grid(len(x)).T
    if grid.shape[1]:
        feas = P.constraint_values(grid).max(axis=0) <= ACTIVE_TOL if P.m else np.ones(grid.shape[1], bool)
        if feas.any():
            cand = grid[:, feas]
            d = np.linalg.norm(cand - x[:, None], axis=0)
            k = int(np.argmin(d))
            if d[k] < best:
                best, best_y = float(d[k]), cand[:, k].copy()

    for start in (x, best_y):
        y = _slsqp_project(P, x, start)
        if y is not None:
            d = float(np.linalg.norm(y - x))
            if d < best:
                best, best_y = d, y
    best_y = _polish(P, x, best_y, step=best / 4 if best > 0 else 1e-6)
    return float(np.linalg.norm(best_y - x)), best_y


def feasible_samples(P: Problem, center, radius: float, count: int, levels: int = 6) -> np.ndarray:
    """Deterministic feasible points within ``radius`` of ``center``.

    Dyadic axis offsets that happen to be feasible come first, then low-discrepancy
    ball points, each replaced by its nearest feasible point when infeasible.
    """
    center = np.asarray(center, dtype=float)
    n = len(center)
    out: list[np.ndarray] = []

    def keep(y):
        if np.linalg.norm(y - center) <= radius * (1 + 1e-12) and not any(
            np.max(np.abs(y - z)) <= 1e-12 for z in out
        ):
            out.append(y)

    for off in dyadic_axis_points(n, radius, levels):
        y = center + off
        if P.is_feasible(y):
            keep(y)
    for p in ball_points(count, n):
        x = center + radius * p
        y = x if P.is_feasible(x) else nearest_feasible(P, x, center)[1]
        keep(y)
        if len(out) >= count:
            break
    return np.array(out).reshape(-1, n)
