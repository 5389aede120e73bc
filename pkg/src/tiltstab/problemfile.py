"""Line-oriented problem files.

    # comment
    vars x1 x2
    minimize x2^2 + x1*x2 - x1
    st -x1 <= 0
    st x1*x2^2 <= 0
    point 0 0

Directives may appear in any order; ``vars``, ``minimize`` and ``point``
exactly once, ``st`` any number of times. Each ``st lhs <= rhs`` is stored as
``lhs - rhs <= 0`` (just ``lhs`` when the right side is the literal 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from . import exprcore as ec
from .nlpmodel import Problem

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class ProblemFile:
    names: tuple[str, ...]
    objective: ec.Expr
    constraints: tuple[ec.Expr, ...]
    point: tuple[float, ...]

    def to_problem(self) -> Problem:
        return Problem(self.names, self.objective, self.constraints, list(self.point))


def _normalize(lhs: ec.Expr, rhs: ec.Expr) -> ec.Expr:
    if isinstance(rhs, ec.Const) and rhs.value == 0.0:
        return lhs
    return ec.sub(lhs, rhs)


def parse_problem(text: str) -> ProblemFile:
    directives: dict[str, tuple[int, str]] = {}
    constraints: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        head, rest = head.strip(), rest.strip()
        if head == "st":
            constraints.append((lineno, rest))
        elif head in ("vars", "minimize", "point"):
            if head in directives:
                raise ProblemFileError(f"duplicate '{head}' directive", lineno)
            directives[head] = (lineno, rest)
        else:
            raise ProblemFileError(f"unknown directive '{head}'", lineno)
    for need in ("vars", "minimize", "point"):
        if need not in directives:
            raise ProblemFileError(f"missing '{need}' directive")

    lineno, rest = directives["vars"]
    names = tuple(rest.split())
    if not names:
        raise ProblemFileError("'vars' needs at least one name", lineno)
    for nm in names:
        if not _NAME.match(nm):
            raise ProblemFileError(f"invalid variable name '{nm}'", lineno)
    if len(set(names)) != len(names):
        raise ProblemFileError("duplicate variable name", lineno)

    def expr(src: str, at: int) -> ec.Expr:
        try:
            return ec.parse_expr(src, names)
        except ec.ParseError as exc:
            raise ProblemFileError(str(exc), at) from exc

    lineno, rest = directives["minimize"]
    objective = expr(rest, lineno)

    normalized = []
    for lineno, rest in constraints:
        parts = rest.split("<=")
        if len(parts) != 2:
            raise ProblemFileError("constraint must have the form 'lhs <= rhs'", lineno)
        normalized.append(_normalize(expr(parts[0], lineno), expr(parts[1], lineno)))

    lineno, rest = directives["point"]
    try:
        point = tuple(float(t) for t in rest.split())
    except ValueError as exc:
        raise ProblemFileError(f"bad number in point: {exc}", lineno) from exc
    if len(point) != len(names):
        raise ProblemFileError(f"point has {len(point)} entries but {len(names)} variables are declared", lineno)
    return ProblemFile(names, objective, tuple(normalized), point)


def load_problem(path) -> ProblemFile:
    return parse_problem(Path(path).read_text(encoding="utf-8"))


def format_problem(pf: ProblemFile) -> str:
    """Re-emit with normalized constraints; parsing the output gives the same trees."""
    lines = [
        "vars " + " ".join(pf.names),
        "minimize " + ec.to_text(pf.objective, pf.names),
        *(f"st {ec.to_text(q, pf.names)} <= 0" for q in pf.constraints),
        "point " + " ".join(repr(float(p)) for p in pf.point),
    ]
    return "\n".join(lines) + "\n"
