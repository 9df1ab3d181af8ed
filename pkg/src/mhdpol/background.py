"""Equilibrium background fields and their first derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonPhysical
from .expr import Expr, as_expr, evaluate_with_gradient


@dataclass(frozen=True)
class BackgroundField:
    """Equilibrium state (rho, H, p) plus the adiabatic index gamma.

    Fields are expressions in ``t, x1, x2, x3``; numbers and strings are
    accepted and parsed on construction.

    Examples
    --------
    >>> bg = BackgroundField.from_values(rho=1.0, p="1 + 0.1*tanh(x2)", H=(1, 0, 0), gamma=5/3)
    >>> bg.evaluate(0.0, (0.0, 0.0, 0.0)).grad_p
    array([0. , 0.1, 0. ])
    """

    rho: Expr
    p: Expr
    H: tuple
    gamma: float

    def __post_init__(self):
        if len(self.H) != 3:
            raise ValueError("H needs exactly three components")
        if not self.gamma > 0:
            raise NonPhysical(f"adiabatic index must be positive, got {self.gamma}")

    @classmethod
    def from_values(cls, rho, p, H, gamma) -> "BackgroundField":
        return cls(as_expr(rho), as_expr(p), tuple(as_expr(h) for h in H), float(gamma))

    def evaluate(self, t: float, x) -> "BackgroundEval":
        return eval_background(self, t, x)


@dataclass(frozen=True, eq=False)
class BackgroundEval:
    """Background values and exact first spatial derivatives at one point.

    ``jac_H[k, j]`` is dH_k/dx_j.
    """

    rho: float
    p: float
    H: np.ndarray
    gamma: float
    grad_rho: np.ndarray
    grad_p: np.ndarray
    jac_H: np.ndarray

    @classmethod
    def constant(cls, rho, p, H, gamma) -> "BackgroundEval":
        bg = cls(float(rho), float(p), np.asarray(H, dtype=float), float(gamma),
                 np.zeros(3), np.zeros(3), np.zeros((3, 3)))
        bg.check_physical()
        return bg

    def check_physical(self) -> None:
        if not self.rho > 0:
            raise NonPhysical(f"density must be positive, got {self.rho}")
        if not self.p > 0:
            raise NonPhysical(f"pressure must be positive, got {self.p}")
        if not self.gamma > 0:
            raise NonPhysical(f"adiabatic index must be positive, got {self.gamma}")

    @property
    def gp(self) -> float:
        return self.gamma * self.p

    @property
    def c2(self) -> float:
        return self.gamma * self.p / self.rho

    @property
    def h2(self) -> float:
        return float(self.H @ self.H) / self.rho

    @cached_property
    def curl_H(self) -> np.ndarray:
        J = self.jac_H
        return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])

    @property
    def div_H(self) -> float:
        return float(np.trace(self.jac_H))

    @property
    def grad_H2(self) -> np.ndarray:
        return 2.0 * self.jac_H.T @ self.H

    def is_constant(self) -> bool:
        return not (self.grad_rho.any() or self.grad_p.any() or self.jac_H.any())


def eval_background(B: BackgroundField, t: float, x) -> BackgroundEval:
    """Evaluate ``B`` and its spatial gradients at ``(t, x)`` by forward-mode AD.

    Raises
    ------
    DomainError
        If any component expression is undefined at the point.
    NonPhysical
        If rho <= 0 or p <= 0 there.
    """
    x = np.asarray(x, dtype=float)
    rho, grad_rho = evaluate_with_gradient(B.rho, t, x)
    p, grad_p = evaluate_with_gradient(B.p, t, x)
    H = np.empty(3)
    J = np.empty((3, 3))
    for k, comp in enumerate(B.H):
        H[k], J[k] = evaluate_with_gradient(comp, t, x)
    bg = BackgroundEval(rho, p, H, B.gamma, grad_rho, grad_p, J)
    bg.check_physical()
    return bg


def equilibrium_residual(B: BackgroundField, x, t: float = 0.0) -> np.ndarray:
    """Force balance ``grad p + H x curl H`` of a static equilibrium.

    Zero for a true equilibrium.  The value is returned, not judged: a
    non-zero residual only means the first-order symbol built later relies
    on a simplification that does not hold at ``x``.
    """
    bg = eval_background(B, t, x)
    return bg.grad_p + np.cross(bg.H, bg.curl_H)


def equilibrium_tolerance(bg: BackgroundEval) -> float:
    """Threshold above which the CLI warns about a non-equilibrium background."""
    return 1e-10 * (np.linalg.norm(bg.grad_p) + np.linalg.norm(bg.H) * np.linalg.norm(bg.curl_H) + 1.0)
