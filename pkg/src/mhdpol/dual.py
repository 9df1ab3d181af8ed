"""Forward-mode automatic differentiation with vector-valued dual parts.

A :class:`Dual` carries a value and the gradient of that value with respect
to a fixed set of seed variables.  Plain floats mix freely with duals.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


class Dual:
    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = float(val)
        self.grad = np.asarray(grad, dtype=float)

    @classmethod
    def variable(cls, val, index: int, n: int) -> "Dual":
        g = np.zeros(n)
        g[index] = 1.0
        return cls(val, g)

    @classmethod
    def constant(cls, val, n: int) -> "Dual":
        return cls(val, np.zeros(n))

    def __repr__(self) -> str:
        return f"Dual({self.val!r}, {self.grad!r})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.grad + other.grad)
        return Dual(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.grad - other.grad)
        return Dual(self.val - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.grad)

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.val * other.grad + other.val * self.grad)
        return Dual(self.val * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if other.val == 0.0:
                raise DomainError("division by zero")
            inv = 1.0 / other.val
            return Dual(self.val * inv, (self.grad - self.val * inv * other.grad) * inv)
        if other == 0:
            raise DomainError("division by zero")
        return Dual(self.val / other, self.grad / other)

    def __rtruediv__(self, other):
        if self.val == 0.0:
            raise DomainError("division by zero")
        inv = 1.0 / self.val
        return Dual(other * inv, -other * inv * inv * self.grad)

    def __pow__(self, other):
        if isinstance(other, Dual):
            if not other.grad.any():
                return self ** other.val
            if self.val <= 0.0:
                raise DomainError("non-positive base with variable exponent")
            return exp(other * log(self))
        n = float(other)
        if n == 0.0:
            return Dual(1.0, np.zeros_like(self.grad))
        if self.val == 0.0 and n < 1.0:
            if n < 0.0 or self.grad.any():
                raise DomainError("zero base with exponent < 1")
        if self.val < 0.0 and not n.is_integer():
            raise DomainError("negative base with fractional exponent")
        v = self.val ** n
        d = n * self.val ** (n - 1.0) if n != 1.0 else 1.0
        return Dual(v, d * self.grad)

    def __rpow__(self, other):
        return Dual(other, np.zeros_like(self.grad)) ** self


def _unary(x, f, df):
    if isinstance(x, Dual):
        return Dual(f(x.val), df(x.val) * x.grad)
    return f(x)


def sin(x):
    return _unary(x, math.sin, math.cos)


def cos(x):
    return _unary(x, math.cos, lambda v: -math.sin(v))


def exp(x):
    try:
        return _unary(x, math.exp, math.exp)
    except OverflowError as exc:
        raise DomainError("exp overflow") from exc


def tanh(x):
    return _unary(x, math.tanh, lambda v: 1.0 - math.tanh(v) ** 2)


def log(x):
    v = x.val if isinstance(x, Dual) else x
    if v <= 0.0:
        raise DomainError("log of non-positive value")
    return _unary(x, math.log, lambda v: 1.0 / v)


def sqrt(x):
    v = x.val if isinstance(x, Dual) else float(x)
    if v < 0.0:
        raise DomainError(f"sqrt of negative value {v:.6g}")
    if v == 0.0:
        if isinstance(x, Dual) and x.grad.any():
            raise DomainError("sqrt not differentiable at 0")
        return Dual(0.0, np.zeros_like(x.grad)) if isinstance(x, Dual) else 0.0
    return _unary(x, math.sqrt, lambda v: 0.5 / math.sqrt(v))


def fabs(x):
    return _unary(x, abs, lambda v: math.copysign(1.0, v) if v != 0.0 else 0.0)


def value(x) -> float:
    return x.val if isinstance(x, Dual) else float(x)


def gradient(x, n: int) -> np.ndarray:
    return x.grad if isinstance(x, Dual) else np.zeros(n)
