"""Scalar expression trees: parsing, evaluation and symbolic derivatives.

Expressions are immutable trees built from constants, variables, the four
arithmetic operations, negation and nonnegative integer powers. That class is
closed under differentiation, so gradients and Hessians are again ``Expr``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

DIV_GUARD = 1e-12


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class ExprSyntaxError(ParseError):
    def __init__(self, offset: int, expected: str):
        super().__init__(f"expected {expected}", offset)
        self.expected = expected


class NonIntegerExponent(ParseError):
    def __init__(self, token: str, offset: int):
        super().__init__(f"exponent must be a nonnegative integer, got {token!r}", offset)
        self.token = token


class DivisionNearZero(ExprError, ArithmeticError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("Pow exponent must be a nonnegative int")


@dataclass(frozen=True)
class Neg:
    child: "Expr"


Expr = Union[Const, Var, Add, Sub, Mul, Div, Pow, Neg]

_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


# -- smart constructors: fold only when every operand is a literal -----------


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and abs(b.value) >= DIV_GUARD:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def power(a: Expr, k: int) -> Expr:
    if isinstance(a, Const):
        return Const(a.value**k)
    return Pow(a, k)


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.index = {name: i for i, name in enumerate(names)}
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ExprSyntaxError(start, "number, identifier, operator or parenthesis")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, val, off = self.take()
        if kind != "op" or val != op:
            raise ExprSyntaxError(off, repr(op))

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise ExprSyntaxError(0, "expression")
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(off, "operator or end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                e = add(e, rhs) if val == "+" else sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                e = mul(e, rhs) if val == "*" else div(e, rhs)
            else:
                return e

    def factor(self) -> Expr:
        kind, val, _ = self.peek()
        # unary minus binds looser than '^': -x^2 is -(x^2)
        if kind == "op" and val == "-":
            self.take()
            return neg(self.factor())
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, off = self.take()
            if kind == "num" and val.isdigit():
                return power(base, int(val))
            if kind == "num" or (kind == "op" and val == "-"):
                raise NonIntegerExponent(val, off)
            raise ExprSyntaxError(off, "nonnegative integer exponent")
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val not in self.index:
                raise UnknownIdentifier(val, off)
            return Var(self.index[val])
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(off, "number, identifier or '('")


def parse_expr(text: str, names: Sequence[str]) -> Expr:
    """Parse ``text`` over the declared variable ``names`` (0-based by position)."""
    return _Parser(text, names).parse()


def to_text(e: Expr, names: Sequence[str]) -> str:
    """Render ``e`` in the input grammar; ``parse_expr`` of the result rebuilds ``e``."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Neg):
        return f"(-{to_text(e.child, names)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base, names)})^{e.exponent}"
    op = _BINARY[type(e)]
    return f"({to_text(e.left, names)} {op} {to_text(e.right, names)})"


def max_var_index(e: Expr) -> int:
    """Largest variable index in ``e``; -1 when ``e`` is constant."""
    if isinstance(e, Const):
        return -1
    if isinstance(e, Var):
        return e.index
    if isinstance(e, (Neg,)):
        return max_var_index(e.child)
    if isinstance(e, Pow):
        return max_var_index(e.base)
    return max(max_var_index(e.left), max_var_index(e.right))


# -- evaluation ---------------------------------------------------------------


def _guard(den):
    if np.any(np.abs(den) < DIV_GUARD):
        raise DivisionNearZero("denominator magnitude below 1e-12")
    return den


def eval_expr(e: Expr, x) -> float | np.ndarray:
    """Evaluate ``e`` at ``x``.

    ``x`` is indexed by variable along its first axis, so an ``(n, N)`` array
    evaluates ``N`` points at once.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x[e.index]
    if isinstance(e, Add):
        return eval_expr(e.left, x) + eval_expr(e.right, x)
    if isinstance(e, Sub):
        return eval_expr(e.left, x) - eval_expr(e.right, x)
    if isinstance(e, Mul):
        return eval_expr(e.left, x) * eval_expr(e.right, x)
    if isinstance(e, Div):
        return eval_expr(e.left, x) / _guard(eval_expr(e.right, x))
    if isinstance(e, Pow):
        return eval_expr(e.base, x) ** e.exponent
    if isinstance(e, Neg):
        return -eval_expr(e.child, x)
    raise TypeError(f"not an expression node: {e!r}")


def _source(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x[{e.index}]"
    if isinstance(e, Neg):
        return f"(-{_source(e.child)})"
    if isinstance(e, Pow):
        return f"({_source(e.base)})**{e.exponent}"
    if isinstance(e, Div):
        return f"({_source(e.left)} / _guard({_source(e.right)}))"
    return f"({_source(e.left)} {_BINARY[type(e)]} {_source(e.right)})"


def lambdify(e: Expr) -> Callable:
    """Compile ``e`` to a Python function of ``x`` computing ``eval_expr(e, x)``."""
    code = compile(f"lambda x: {_source(e)}", "<expr>", "eval")
    return eval(code, {"_guard": _guard})


# -- differentiation ----------------------------------------------------------


def diff(e: Expr, j: int) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to variable ``j``."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.index == j else 0.0)
    if isinstance(e, Add):
        return add(diff(e.left, j), diff(e.right, j))
    if isinstance(e, Sub):
        return sub(diff(e.left, j), diff(e.right, j))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, j), e.right), mul(e.left, diff(e.right, j)))
    if isinstance(e, Div):
        num = sub(mul(diff(e.left, j), e.right), mul(e.left, diff(e.right, j)))
        return div(num, power(e.right, 2))
    if isinstance(e, Pow):
        k = e.exponent
        if k == 0:
            return Const(0.0)
        if k == 1:
            return diff(e.base, j)
        return mul(mul(Const(float(k)), power(e.base, k - 1)), diff(e.base, j))
    if isinstance(e, Neg):
        return neg(diff(e.child, j))
    raise TypeError(f"not an expression node: {e!r}")


def grad(e: Expr, n: int) -> list[Expr]:
    return [diff(e, j) for j in range(n)]


def hessian(e: Expr, n: int) -> list[list[Expr]]:
    """Symmetric matrix of second partials; entry (i, j) is built once for i <= j."""
    g = grad(e, n)
    h: list[list[Expr | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            h[i][j] = h[j][i] = diff(g[i], j)
    return h  # type: ignore[return-value]


def eval_vector(es: Sequence[Expr], x) -> np.ndarray:
    return np.array([eval_expr(e, x) for e in es], dtype=float)


def eval_matrix(es: Sequence[Sequence[Expr]], x) -> np.ndarray:
    return np.array([[eval_expr(e, x) for e in row] for row in es], dtype=float)
