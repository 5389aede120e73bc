"""Full analysis pipeline: stationarity, CQ probes, second-order checks, oracle, consistency."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import exprcore as ec
from .nlpmodel import STATIONARITY_TOL, InfeasiblePoint, Problem, evaluate, stationarity_residual
from .oracle import MAX_DIM, OracleConfig, compare_modulus, verify_growth, verify_tilt_stability
from .stability import (
    ActiveSetTooLarge,
    SecondOrderReport,
    Verdict,
    build_delta,
    check_crcq,
    check_extreme_point_variant,
    check_kappa_free,
    check_licq,
    check_mfcq,
    check_pointbased,
    check_rusosc_sampled,
    check_ssosc,
    estimate_bepp,
    estimate_mscq,
    tilt_bound,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NOT_STATIONARY = 2
EXIT_INCONSISTENT = 3
EXIT_MULTIVALUED = 4


@dataclass(frozen=True)
class AnalysisConfig:
    gamma: float | None = None  # default 1.5 * MSCQ estimate
    eta: float = 1e-2
    kappa: float = 1.0
    radius: float = 0.1  # MSCQ sample radius
    directions: int = 500
    mscq_samples: int = 2000
    bepp_radius: float = 1.0
    bepp_samples: int = 100
    bepp_directions: int = 50
    crcq_radius: float = 1e-2
    crcq_samples: int = 200
    rusosc_budget: int = 200
    rusosc_directions: int = 100
    delta_norm: str = "inf"
    oracle: bool = True
    oracle_config: OracleConfig = field(default_factory=OracleConfig)


def default_gamma(kappa_mscq: float) -> float:
    return 1.5 * kappa_mscq if kappa_mscq > 0 else 1.0


def problem_echo(P: Problem, source: str | None = None) -> dict:
    out = {
        "vars": list(P.names),
        "objective": ec.to_text(P.objective, P.names),
        "constraints": [ec.to_text(q, P.names) + " <= 0" for q in P.constraints],
        "point": P.point,
    }
    if source is not None:
        out["source"] = source
    return out


def _cq_section(P: Problem, cfg: AnalysisConfig) -> dict:
    ev = evaluate(P)
    try:
        crcq = check_crcq(P, ev.x, cfg.crcq_radius, cfg.crcq_samples)
    except ActiveSetTooLarge as exc:
        crcq = Verdict.not_applicable(str(exc))
    return {
        "licq": check_licq(ev),
        "mfcq": check_mfcq(ev),
        "crcq": crcq,
        "mscq": estimate_mscq(P, ev.x, cfg.radius, cfg.mscq_samples),
        "bepp": estimate_bepp(P, ev.x, cfg.bepp_radius, cfg.bepp_samples, cfg.bepp_directions),
    }


def _second_order(P: Problem, cfg: AnalysisConfig, gamma: float) -> SecondOrderReport:
    delta = build_delta(P, None, gamma, cfg.directions, cfg.delta_norm)
    return SecondOrderReport(
        ssosc=check_ssosc(P),
        pointbased=check_pointbased(P, None, gamma, cfg.kappa, delta=delta),
        kappa_free=check_kappa_free(P, None, gamma, delta=delta),
        extreme_point=check_extreme_point_variant(P, None, cfg.kappa, cfg.directions),
        rusosc=check_rusosc_sampled(P, None, cfg.eta, 1.0 / cfg.kappa, cfg.rusosc_budget, cfg.rusosc_directions, gamma),
        tilt_bound=tilt_bound(P, None, gamma, delta=delta),
        delta=delta,
        sampling={"directions": delta.directions, "eta": cfg.eta, "rusosc_budget": cfg.rusosc_budget,
                  "rusosc_directions": cfg.rusosc_directions},
    )


def _not_applicable(reason: str) -> dict:
    na = Verdict.not_applicable(reason)
    return {k: na for k in ("ssosc", "pointbased", "kappa_free", "extreme_point", "rusosc")}


def _consistency(so: SecondOrderReport | None, oracle, kappa: float) -> dict:
    checks = []
    if so is not None:
        if so.ssosc.holds:
            checks.append({"name": "ssosc_implies_kappa_free", "passed": so.kappa_free.holds})
        if so.pointbased.holds:
            checks.append({"name": "pointbased_bounds_modulus", "passed": so.tilt_bound <= kappa * (1 + 1e-12),
                           "tilt_bound": so.tilt_bound, "kappa": kappa})
    if so is not None and oracle is not None:
        if so.kappa_free.holds and not oracle.single_valued:
            checks.append({"name": "sufficient_condition_vs_oracle", "passed": False,
                           "note": "second-order condition holds but the oracle found several minimizers"})
        if oracle.single_valued and np.isfinite(so.tilt_bound) and so.kappa_free.holds:
            rec = compare_modulus(oracle.lipschitz, so.tilt_bound)
            checks.append({"name": "empirical_modulus", "passed": rec.passed, "record": rec})
    return {"passed": all(c["passed"] for c in checks), "checks": checks}


def analyze(P: Problem, cfg: AnalysisConfig | None = None, source: str | None = None) -> tuple[int, dict]:
    """Run the whole pipeline; returns ``(exit_code, report)``."""
    cfg = cfg or AnalysisConfig()
    report: dict = {"version": __version__, "problem": problem_echo(P, source), "config": cfg}
    try:
        residual, lam = stationarity_residual(P)
    except InfeasiblePoint as exc:
        report["stationarity"] = {"residual": float("inf"), "multiplier": None, "error": str(exc)}
        report["exit_code"] = EXIT_NOT_STATIONARY
        return EXIT_NOT_STATIONARY, report
    report["stationarity"] = {"residual": residual, "multiplier": lam, "tolerance": STATIONARITY_TOL}
    if residual > STATIONARITY_TOL:
        report["exit_code"] = EXIT_NOT_STATIONARY
        return EXIT_NOT_STATIONARY, report

    cq = _cq_section(P, cfg)
    report["cq"] = cq
    mscq = cq["mscq"]
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(mscq.kappa)
    report["gamma"] = {"value": gamma, "mscq_estimate": mscq.kappa, "exceeds_estimate": gamma > mscq.kappa,
                       "source": "flag" if cfg.gamma is not None else "1.5 * mscq estimate"}

    so = None
    if mscq.diverging:
        report["second_order"] = _not_applicable("mscq")
        report["tilt_bound"] = "not_applicable"
    else:
        so = _second_order(P, cfg, gamma)
        report["second_order"] = so
        report["tilt_bound"] = so.tilt_bound

    oracle = None
    if not cfg.oracle:
        report["oracle"] = "skipped"
    elif P.n > MAX_DIM:
        report["oracle"] = "skipped: n > 3"
    else:
        oracle = verify_tilt_stability(P, None, cfg.oracle_config)
        if oracle.single_valued:
            oracle.growth = verify_growth(P, None, cfg.kappa, cfg.oracle_config, oracle)
        report["oracle"] = oracle

    report["consistency"] = _consistency(so, oracle, cfg.kappa)
    code = EXIT_OK if report["consistency"]["passed"] else EXIT_INCONSISTENT
    report["exit_code"] = code
    return code, report


def with_overrides(cfg: AnalysisConfig, **kw) -> AnalysisConfig:
    return dataclasses.replace(cfg, **{k: v for k, v in kw.items() if v is not None})
