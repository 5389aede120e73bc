"""Verdict vocabulary shared by every check.

Certified verdicts (``Holds``/``Fails``) come from exact polyhedral and
eigenvalue computations; the ``...OnSamples``/``...WithWitness`` family marks
estimator output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Status(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    HOLDS_ON_SAMPLES = "HoldsOnSamples"
    FAILS_WITH_WITNESS = "FailsWithWitness"
    BOUNDED_ON_SAMPLES = "BoundedOnSamples"
    NOT_APPLICABLE = "NotApplicable"


_POSITIVE = {Status.HOLDS, Status.HOLDS_ON_SAMPLES, Status.BOUNDED_ON_SAMPLES}

SAMPLED_DELTA = "on sampled Delta"


@dataclass
class Verdict:
    status: Status
    witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    qualifier: str | None = None
    reason: str | None = None

    @property
    def holds(self) -> bool:
        return self.status in _POSITIVE

    @property
    def fails(self) -> bool:
        return self.status in (Status.FAILS, Status.FAILS_WITH_WITNESS)

    @classmethod
    def not_applicable(cls, reason: str) -> "Verdict":
        return cls(Status.NOT_APPLICABLE, reason=reason)

    def __str__(self) -> str:
        s = self.status.value
        if self.qualifier:
            s += f" ({self.qualifier})"
        if self.reason:
            s += f": {self.reason}"
        return s
