"""Constraint qualifications and second-order tilt-stability conditions."""

from .cq import (
    CQ_NAMES,
    ActiveSetTooLarge,
    CQReport,
    MSCQEstimate,
    UnknownCQName,
    check_crcq,
    check_licq,
    check_mfcq,
    estimate_bepp,
    estimate_mscq,
    run_cq_probes,
)
from .graphderiv import GraphDerivSet, check_rusosc_sampled, graphical_derivative
from .second_order import (
    DeltaSet,
    SecondOrderReport,
    build_delta,
    check_extreme_point_variant,
    check_kappa_free,
    check_pointbased,
    check_ssosc,
    reduced_min_eig,
    tilt_bound,
)
from .verdicts import SAMPLED_DELTA, Status, Verdict

__all__ = [
    "CQ_NAMES",
    "ActiveSetTooLarge",
    "CQReport",
    "DeltaSet",
    "GraphDerivSet",
    "MSCQEstimate",
    "SAMPLED_DELTA",
    "SecondOrderReport",
    "Status",
    "UnknownCQName",
    "Verdict",
    "build_delta",
    "check_crcq",
    "check_extreme_point_variant",
    "check_kappa_free",
    "check_licq",
    "check_mfcq",
    "check_pointbased",
    "check_rusosc_sampled",
    "check_ssosc",
    "estimate_bepp",
    "estimate_mscq",
    "graphical_derivative",
    "reduced_min_eig",
    "run_cq_probes",
    "tilt_bound",
]
