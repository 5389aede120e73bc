from pathlib import Path

import numpy as np
import pytest

from tiltstab.nlpmodel import Problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def ex45() -> Problem:
    return Problem.from_text(["x1", "x2"], "x1^2 + x2^2", ["x1 - x2", "x2 - x1"], [0, 0])


def ex411() -> Problem:
    return Problem.from_text(["x1", "x2"], "x2^2 + x1*x2 - x1", ["-x1", "x1", "x1*x2^2"], [0, 0])


def ex35() -> Problem:
    return Problem.from_text(["x1", "x2"], "x1^2 + x2^2", ["x1*x2", "-x1*x2"], [0, 0])


def unconstrained() -> Problem:
    return Problem.from_text(["x1", "x2"], "x1^2 + x2^2", [], [0, 0])


def halfplane() -> Problem:
    return Problem.from_text(["x1", "x2"], "x1^2 + x2^2", ["x1"], [0, 0])


def concave_1d() -> Problem:
    return Problem.from_text(["x1"], "-x1^2", ["x1"], [0])


def indefinite() -> Problem:
    return Problem.from_text(["x1", "x2"], "-x1^2 + x2^2", ["x1", "-x1"], [0, 0])


def mfcq_fixture() -> Problem:
    return Problem.from_text(["x1", "x2"], "x1^2 + x2^2", ["x1 + x2"], [0, 0])


FIXTURES = {
    "ex4_5": ex45,
    "ex4_11": ex411,
    "unconstrained": unconstrained,
    "halfplane": halfplane,
    "mfcq": mfcq_fixture,
    "indefinite": indefinite,
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
