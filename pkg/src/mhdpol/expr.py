"""Scalar expressions for background fields.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := power (("*" | "/") power)*
    power   := unary ("^" power)?          # right-associative
    unary   := "-" unary | primary
    primary := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"

Unary minus binds tighter than the base of ``^``, so ``-x1^2`` is ``(-x1)^2``.
Variables are ``t, x1, x2, x3``; functions are ``sin cos exp sqrt tanh abs``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import dual
from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

VARIABLES = ("t", "x1", "x2", "x3")
FUNCTIONS = {
    "sin": dual.sin,
    "cos": dual.cos,
    "exp": dual.exp,
    "sqrt": dual.sqrt,
    "tanh": dual.tanh,
    "abs": dual.fabs,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_PRIMARY_START = frozenset({"number", "identifier", "(", "-"})


class Expr:
    """Base AST node.  Nodes are immutable and evaluation is pure."""

    def evaluate(self, env):
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if not isinstance(b, dual.Dual) and b == 0:
                raise DomainError("division by zero")
            return a / b
        return _power(a, b)

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def evaluate(self, env):
        return FUNCTIONS[self.func](self.arg.evaluate(env))

    def __str__(self) -> str:
        return f"{self.func}({self.arg})"


def _power(a, b):
    if isinstance(a, dual.Dual) or isinstance(b, dual.Dual):
        if not isinstance(a, dual.Dual):
            return b.__rpow__(a)
        return a**b
    if a == 0.0 and b < 0.0:
        raise DomainError("zero to a negative power")
    if a < 0.0 and not float(b).is_integer():
        raise DomainError("negative base with fractional exponent")
    try:
        return math.pow(a, b)
    except OverflowError as exc:
        raise DomainError("power overflow") from exc


def _tokenize(source: str):
    pos = 0
    tokens = []
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos),
                                  _PRIMARY_START | {"operator"})
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            tokens.append((text if kind == "op" else kind, text, _byte_offset(source, pos)))
        pos = m.end()
    tokens.append(("eof", "", _byte_offset(source, len(source))))
    return tokens


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def kind(self) -> str:
        return self.tokens[self.i][0]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, text, offset = self.tokens[self.i]
        what = "end of input" if kind == "eof" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", offset, expected)

    def parse(self) -> Expr:
        node = self.expr()
        if self.kind != "eof":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.kind in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.power()
        while self.kind in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.power())
        return node

    def power(self) -> Expr:
        base = self.unary()
        if self.kind == "^":
            self.advance()
            return BinOp("^", base, self.power())
        return base

    def unary(self) -> Expr:
        if self.kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        kind, text, offset = self.tokens[self.i]
        if kind == "number":
            self.advance()
            return Num(float(text))
        if kind == "identifier":
            self.advance()
            if text in FUNCTIONS:
                if self.kind != "(":
                    self.fail({"("})
                self.advance()
                arg = self.expr()
                if self.kind != ")":
                    self.fail({")", "+", "-", "*", "/", "^"})
                self.advance()
                return Call(text, arg)
            if text in VARIABLES:
                return Var(text)
            raise UnknownIdentifier(text, offset)
        if kind == "(":
            self.advance()
            node = self.expr()
            if self.kind != ")":
                self.fail({")", "+", "-", "*", "/", "^"})
            self.advance()
            return node
        self.fail(_PRIMARY_START)


def parse_expr(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises
    ------
    ExprSyntaxError
        With the byte offset of the offending token and the set of tokens
        that would have been accepted there.
    UnknownIdentifier
        For names outside the variable and function tables.
    """
    return _Parser(source).parse()


def as_expr(value) -> Expr:
    """Coerce a number or expression string to an :class:`Expr`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a valid expression")
    if isinstance(value, (int, float)):
        return Num(float(value))
    if isinstance(value, str):
        return parse_expr(value)
    raise TypeError(f"cannot build an expression from {type(value).__name__}")


def evaluate(expr: Expr, t: float, x) -> float:
    """Plain float evaluation at ``(t, x)``."""
    env = {"t": float(t), "x1": float(x[0]), "x2": float(x[1]), "x3": float(x[2])}
    out = float(expr.evaluate(env))
    if not math.isfinite(out):
        raise DomainError("expression evaluated to a non-finite value")
    return out


def evaluate_with_gradient(expr: Expr, t: float, x):
    """Value and exact spatial gradient ``(d/dx1, d/dx2, d/dx3)`` at ``(t, x)``."""
    env = {
        "t": dual.Dual.constant(t, 3),
        "x1": dual.Dual.variable(x[0], 0, 3),
        "x2": dual.Dual.variable(x[1], 1, 3),
        "x3": dual.Dual.variable(x[2], 2, 3),
    }
    try:
        out = expr.evaluate(env)
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(str(exc)) from exc
    val, grad = dual.value(out), dual.gradient(out, 3)
    if not (math.isfinite(val) and all(math.isfinite(g) for g in grad)):
        raise DomainError("expression or its gradient is not finite")
    return val, grad.copy()
