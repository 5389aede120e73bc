"""Constraint qualifications at a feasible point: LICQ, MFCQ, CRCQ, MSCQ and BEPP.

LICQ and MFCQ are decided exactly (rank test, one LP). CRCQ, MSCQ and BEPP
quantify over neighborhoods and are probed on deterministic samples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..linalg import rank
from ..nlpmodel import PointEvaluation, Problem, evaluate, multiplier_set
from ..polyhedra import StdPolyhedron, lp_solve
from ..projection import feasible_samples, nearest_feasible
from ..sampling import ball_points, dyadic_axis_points, sphere_grid
from .verdicts import Status, Verdict

MAX_CRCQ_ACTIVE = 12
GROWTH_FACTOR = 1.5
VIOLATION_FLOOR = 1e-12


class ActiveSetTooLarge(ValueError):
    pass


def check_licq(ev: PointEvaluation) -> Verdict:
    k = len(ev.active)
    r = rank(ev.active_jacobian()) if k else 0
    status = Status.HOLDS if r == k else Status.FAILS
    return Verdict(status, details={"rank": r, "active": list(ev.active)})


def check_mfcq(ev: PointEvaluation) -> Verdict:
    """``max t s.t. <grad q_i, d> + t <= 0 (i active), |d_j| <= 1, t <= 1``; Holds iff ``t* > 1e-9``."""
    n, act = ev.n, list(ev.active)
    if not act:
        return Verdict(Status.HOLDS, witness={"d": np.zeros(n)}, details={"t": 1.0})
    k = len(act)
    # columns: d+ (n), d- (n), t+, t-, s (k), u (n), u' (n), z
    cols = 4 * n + 3 + k
    rows, rhs = [], []
    for r_i, i in enumerate(act):
        row = np.zeros(cols)
        a = ev.jac_q[i]
        row[:n], row[n : 2 * n] = a, -a
        row[2 * n], row[2 * n + 1] = 1.0, -1.0
        row[2 * n + 2 + r_i] = 1.0
        rows.append(row)
        rhs.append(0.0)
    base = 2 * n + 2 + k
    for j in range(n):
        row = np.zeros(cols)
        row[j], row[n + j], row[base + j] = 1.0, -1.0, 1.0
        rows.append(row)
        rhs.append(1.0)
        row = np.zeros(cols)
        row[j], row[n + j], row[base + n + j] = -1.0, 1.0, 1.0
        rows.append(row)
        rhs.append(1.0)
    row = np.zeros(cols)
    row[2 * n], row[2 * n + 1], row[-1] = 1.0, -1.0, 1.0
    rows.append(row)
    rhs.append(1.0)
    cost = np.zeros(cols)
    cost[2 * n], cost[2 * n + 1] = -1.0, 1.0
    out = lp_solve(StdPolyhedron(np.array(rows), np.array(rhs)), cost, with_face=False)
    z = out.vertex
    t = float(z[2 * n] - z[2 * n + 1])
    d = z[:n] - z[n : 2 * n]
    status = Status.HOLDS if t > 1e-9 else Status.FAILS
    return Verdict(status, witness={"d": d} if t > 1e-9 else {}, details={"t": t})


def check_crcq(P: Problem, xbar=None, radius: float = 1e-2, samples: int = 200) -> Verdict:
    """Constant rank of every active-gradient subfamily on sampled points near ``xbar``."""
    if radius <= 0 or samples < 1:
        raise ValueError("radius must be positive and samples at least 1")
    ev = evaluate(P, xbar)
    act = list(ev.active)
    if len(act) > MAX_CRCQ_ACTIVE:
        raise ActiveSetTooLarge(f"{len(act)} active constraints (limit {MAX_CRCQ_ACTIVE})")
    subsets = [list(J) for k in range(1, len(act) + 1) for J in itertools.combinations(act, k)]
    base = [rank(ev.jac_q[J]) for J in subsets]
    for p in ball_points(samples, P.n):
        x = ev.x + radius * p
        jac = P.constraint_jacobian(x)
        for J, r0 in zip(subsets, base):
            r = rank(jac[J])
            if r != r0:
                return Verdict(
                    Status.FAILS_WITH_WITNESS,
                    witness={"J": J, "x": x, "rank_at_x": r, "rank_at_xbar": r0},
                )
    return Verdict(Status.HOLDS_ON_SAMPLES, details={"radius": radius, "samples": samples})


def _grows(values: list[float], factor: float = GROWTH_FACTOR, run: int = 3) -> bool:
    """True when ``run`` consecutive ratios of the sequence are all at least ``factor``."""
    streak = 0
    for a, b in zip(values, values[1:]):
        if a > 0 and b >= factor * a:
            streak += 1
            if streak >= run:
                return True
        else:
            streak = 0
    return False


@dataclass
class MSCQEstimate:
    kappa: float
    diverging: bool
    radius: float
    samples: int
    ratios: list[tuple[float, float]] = field(default_factory=list)
    witness: np.ndarray | None = None


def _mscq_ratio_max(P: Problem, xbar: np.ndarray, X: np.ndarray) -> tuple[float, np.ndarray | None]:
    if P.m == 0:
        return 0.0, None
    Q = P.constraint_values(X.T)
    viol = np.linalg.norm(np.maximum(Q, 0.0), axis=0)
    best, arg = 0.0, None
    for x, s in zip(X, viol):
        if s <= VIOLATION_FLOOR:
            continue
        d, _ = nearest_feasible(P, x, xbar)
        if d / s > best:
            best, arg = d / s, x
    return best, arg


def estimate_mscq(P: Problem, xbar=None, radius: float = 0.1, samples: int = 2000) -> MSCQEstimate:
    """Sampled error-bound modulus ``max d(x; feasible set) / ||max(q(x), 0)||``.

    The divergence test reruns a prefix of the same normalized sample set at
    ``radius / 2^k`` for ``k = 0..3`` and flags growth by at least
    ``GROWTH_FACTOR`` at every halving.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    xbar = P.point if xbar is None else np.asarray(xbar, dtype=float)
    unit = ball_points(samples, P.n)
    kappa, witness = _mscq_ratio_max(P, xbar, xbar + radius * unit)
    prefix = unit[: max(50, samples // 8)]
    ratios = []
    for k in range(4):
        r = radius / 2**k
        ratios.append((r, _mscq_ratio_max(P, xbar, xbar + r * prefix)[0]))
    diverging = _grows([v for _, v in ratios])
    return MSCQEstimate(kappa, diverging, radius, samples, ratios, witness)


def _bepp_directions(ev: PointEvaluation, count: int) -> np.ndarray:
    n = ev.n
    dirs = [*np.eye(n), *(-np.eye(n))]
    for i in ev.active:
        a = ev.jac_q[i]
        if np.linalg.norm(a) > 1e-12:
            dirs += [a / np.linalg.norm(a), -a / np.linalg.norm(a)]
    if np.linalg.norm(ev.grad_g) > 1e-12:
        dirs.append(-ev.grad_g / np.linalg.norm(ev.grad_g))
    dirs += list(sphere_grid(count, n))
    return np.array(dirs)


def estimate_bepp(
    P: Problem,
    xbar=None,
    radius: float = 1.0,
    samples: int = 100,
    directions: int = 50,
    levels: int = 6,
) -> Verdict:
    """Largest vertex norm of ``Lambda(x, x*)`` per unit ``x*`` over feasible ``x`` near ``xbar``.

    Points are binned into dyadic shells ``(radius/2^(k+1), radius/2^k]``; the
    verdict fails when the shell maxima keep growing toward ``xbar``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    ev0 = evaluate(P, xbar)
    xbar = ev0.x
    dirs = _bepp_directions(ev0, directions)
    pts = np.vstack([xbar, feasible_samples(P, xbar, radius, samples, levels)])
    records = []
    for x in pts:
        ev = evaluate(P, x)
        best = None
        for xs in dirs:
            mset = multiplier_set(P, ev, xs)
            if mset.empty or not len(mset.decomposition.vertices):
                continue
            V = mset.decomposition.vertices
            norms = np.linalg.norm(V, axis=1)
            j = int(np.argmax(norms))
            ratio = norms[j] / np.linalg.norm(xs)
            if best is None or ratio > best["norm"] + 1e-12:
                best = {"x": x, "xstar": xs, "lam": V[j], "norm": float(ratio)}
        if best is not None:
            records.append(best)

    kappa = max((r["norm"] for r in records), default=0.0)
    shells: dict[int, dict] = {}
    for r in records:
        dist = np.linalg.norm(r["x"] - xbar)
        if dist <= 0:
            continue
        k = int(np.floor(np.log2(radius / dist) + 1e-12))
        if k < levels and (k not in shells or r["norm"] > shells[k]["norm"]):
            shells[k] = r
    shell_max = [shells[k]["norm"] if k in shells else 0.0 for k in range(levels)]
    dyadic = dyadic_axis_points(P.n, radius, levels)
    probes = [r for r in records if np.any(np.all(np.abs(dyadic - (r["x"] - xbar)) <= 1e-15, axis=1))]
    probes.sort(key=lambda r: (-float(np.linalg.norm(r["x"] - xbar)), tuple(r["x"])))
    details = {"kappa": kappa, "radius": radius, "shell_maxima": shell_max, "points": len(pts), "directions": len(dirs)}
    if _grows(shell_max):
        top = max(records, key=lambda r: r["norm"])
        details["probes"] = probes
        return Verdict(Status.FAILS_WITH_WITNESS, witness=top, details=details)
    return Verdict(Status.BOUNDED_ON_SAMPLES, details=details)


@dataclass
class CQReport:
    licq: Verdict | None = None
    mfcq: Verdict | None = None
    crcq: Verdict | None = None
    mscq: MSCQEstimate | None = None
    bepp: Verdict | None = None


CQ_NAMES = ("licq", "mfcq", "crcq", "mscq", "bepp")


class UnknownCQName(ValueError):
    pass


def run_cq_probes(P: Problem, xbar=None, names=CQ_NAMES, mscq_radius: float = 0.1) -> CQReport:
    unknown = [s for s in names if s not in CQ_NAMES]
    if unknown:
        raise UnknownCQName(", ".join(unknown))
    ev = evaluate(P, xbar)
    rep = CQReport()
    if "licq" in names:
        rep.licq = check_licq(ev)
    if "mfcq" in names:
        rep.mfcq = check_mfcq(ev)
    if "crcq" in names:
        rep.crcq = check_crcq(P, ev.x)
    if "mscq" in names:
        rep.mscq = estimate_mscq(P, ev.x, radius=mscq_radius)
    if "bepp" in names:
        rep.bepp = estimate_bepp(P, ev.x)
    return rep
