"""Matrix symbols of the linearized ideal MHD system.

Two families live here:

* the 8x8 first-order system ``q = tau*Id + A(U, xi)`` acting on the state
  ``(rho', u'_1, u'_2, u'_3, H'_1, H'_2, H'_3, p')``;
* the 3x3 second-order wave operator on the displacement, with principal
  symbol ``p2``, first-order part ``p1`` and subprincipal symbol ``ps``.

The ``*_array`` helpers take raw background values and accept complex input,
so derivatives with respect to the background can be taken by complex step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import BackgroundEval
from .errors import DegenerateMode, NonPhysical

# Sign of the (H.xi)(xi(x)H + H(x)xi) term of p2.  Only mutation tests touch it.
_P2_CROSS_SIGN = 1.0

EPS_DEG = 1e-10


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point ``(t, x; tau, xi)`` of the cotangent bundle of R x R^3."""

    t: float
    x: np.ndarray
    tau: float
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float).reshape(3))

    @classmethod
    def from_array(cls, v) -> "PhasePoint":
        """Build from ``(t, x1, x2, x3, tau, xi1, xi2, xi3)``."""
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1:4], v[4], v[5:8])

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.t], self.x, [self.tau], self.xi])

    def replace(self, **changes) -> "PhasePoint":
        fields = {"t": self.t, "x": self.x, "tau": self.tau, "xi": self.xi}
        fields.update(changes)
        return PhasePoint(**fields)


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """Dense square matrix tagged with its homogeneity degree in ``(tau, xi)``."""

    entries: np.ndarray
    degree: int

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix symbol has non-finite entries")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _require_physical(bg: BackgroundEval) -> None:
    if not bg.rho > 0:
        raise NonPhysical(f"density must be positive, got {bg.rho}")
    if not bg.p > 0:
        raise NonPhysical(f"pressure must be positive, got {bg.p}")


# ---------------------------------------------------------------------------
# 8x8 first-order system


def A_array(rho, gp, H, xi) -> np.ndarray:
    """``A(U, xi)`` from raw values; linear in ``xi``."""
    H = np.asarray(H)
    xi = np.asarray(xi)
    dtype = np.result_type(rho, gp, H, xi, float)
    A = np.zeros((8, 8), dtype=dtype)
    hx = H @ xi
    A[0, 1:4] = rho * xi
    # u rows: (p' xi + H x (xi x H')) / rho, with H x (xi x H') = xi (H.H') - H' (H.xi)
    A[1:4, 4:7] = (np.outer(xi, H) - hx * np.eye(3)) / rho
    A[1:4, 7] = xi / rho
    # H rows: (xi.u') H - (H.xi) u'
    A[4:7, 1:4] = np.outer(H, xi) - hx * np.eye(3)
    A[7, 1:4] = gp * xi
    return A


def build_A(bg: BackgroundEval, xi) -> MatrixSymbol:
    _require_physical(bg)
    return MatrixSymbol(A_array(bg.rho, bg.gp, bg.H, np.asarray(xi, dtype=float)), 1)


def build_q(pt: PhasePoint, bg: BackgroundEval) -> MatrixSymbol:
    """Principal symbol ``q = tau*Id_8 + A`` of the first-order system."""
    _require_physical(bg)
    return MatrixSymbol(pt.tau * np.eye(8) + A_array(bg.rho, bg.gp, bg.H, pt.xi), 1)


def symmetrizer_array(rho, gp) -> np.ndarray:
    S = np.diag([gp, rho, rho, rho, 1.0, 1.0, 1.0, (1.0 + rho * rho) / gp])
    S[0, 7] = S[7, 0] = -rho
    return S


def symmetrizer(bg: BackgroundEval) -> MatrixSymbol:
    """Positive-definite ``S`` with ``S A(U, xi)`` symmetric for every xi."""
    _require_physical(bg)
    return MatrixSymbol(symmetrizer_array(bg.rho, bg.gp), 0)


def dA_dx(bg: BackgroundEval, xi) -> np.ndarray:
    """``d/dx_k A(U(x), xi)`` for k = 1..3, shape (3, 8, 8), via complex step."""
    h = 1e-30
    out = np.empty((3, 8, 8))
    for k in range(3):
        rho = bg.rho + 1j * h * bg.grad_rho[k]
        gp = bg.gamma * (bg.p + 1j * h * bg.grad_p[k])
        H = bg.H + 1j * h * bg.jac_H[:, k]
        out[k] = A_array(rho, gp, H, np.asarray(xi, dtype=float)).imag / h
    return out


def det_q(pt: PhasePoint, bg: BackgroundEval) -> float:
    """Factored determinant of ``q``.

    ``tau^2 (tau^2 - cs^2|xi|^2)(tau^2 - cf^2|xi|^2)(tau^2 - (xi.H)^2/rho)``
    """
    from .spectra import wave_speeds

    _require_physical(bg)
    ws = wave_speeds(bg, pt.xi)
    n2 = float(pt.xi @ pt.xi)
    t2 = pt.tau * pt.tau
    hx = float(bg.H @ pt.xi)
    return t2 * (t2 - ws.cs2 * n2) * (t2 - ws.cf2 * n2) * (t2 - hx * hx / bg.rho)


def det_q_many(bg: BackgroundEval, tau, xi) -> np.ndarray:
    """Vectorized :func:`det_q` over arrays ``tau`` of shape (m,) and ``xi`` of shape (m, 3)."""
    _require_physical(bg)
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n2 = np.einsum("ij,ij->i", xi, xi)
    hx = xi @ bg.H
    cross2 = float(bg.H @ bg.H) * n2 - hx * hx
    C = bg.gp * n2 / bg.rho
    Hh = float(bg.H @ bg.H) * n2 / bg.rho
    fast = 0.5 * ((C + Hh) + np.sqrt((C - Hh) ** 2 + 4.0 * np.maximum(cross2, 0.0) / bg.rho * C))
    alf2 = hx * hx / bg.rho
    slow = np.divide(C * alf2, fast, out=np.zeros_like(fast), where=fast > 0)
    t2 = tau * tau
    return t2 * (t2 - slow) * (t2 - fast) * (t2 - alf2)


# ---------------------------------------------------------------------------
# 3x3 wave operator on the displacement


def p2_array(rho, gp, H, tau, xi) -> np.ndarray:
    H = np.asarray(H)
    xi = np.asarray(xi)
    hx = H @ xi
    return ((rho * tau * tau - hx * hx) * np.eye(3)
            - (gp + H @ H) * np.outer(xi, xi)
            + _P2_CROSS_SIGN * hx * (np.outer(xi, H) + np.outer(H, xi)))


def build_p2(pt: PhasePoint, bg: BackgroundEval) -> MatrixSymbol:
    """Principal symbol of the wave operator; real symmetric, degree 2."""
    _require_physical(bg)
    return MatrixSymbol(p2_array(bg.rho, bg.gp, bg.H, pt.tau, pt.xi), 2)


def _grad_H_dot_xi(bg: BackgroundEval, xi) -> np.ndarray:
    # x-gradient of x -> H(x).xi at frozen xi
    return bg.jac_H.T @ xi


def _nabla_otimes_H(bg: BackgroundEval) -> np.ndarray:
    # (nabla (x) H)_{ij} = d_i H_j
    return bg.jac_H.T


def p1_array(bg: BackgroundEval, xi) -> np.ndarray:
    """First-order symbol as printed after the equilibrium simplification.

    Every term carries a background derivative, so ``p1 = 0`` for constant
    backgrounds.  Returned as a complex array (purely imaginary).
    """
    xi = np.asarray(xi, dtype=float)
    H = bg.H
    gp_ = bg.grad_p
    gH2 = bg.grad_H2
    ghx = _grad_H_dot_xi(bg, xi)
    hx = float(H @ xi)
    divH = bg.div_H
    nabH = _nabla_otimes_H(bg)
    H_dot_nabla_H = bg.jac_H @ H  # (H.nabla) H
    m = (bg.gamma * np.outer(gp_, xi)
         + np.outer(xi, gp_)
         - np.outer(gp_, xi)
         + (ghx @ H + hx * divH) * np.eye(3)
         + 0.5 * np.outer(xi, gH2)
         + 0.5 * np.outer(gH2, xi)
         - np.outer(H_dot_nabla_H, xi)
         - np.outer(ghx, H)
         - hx * nabH
         - divH * np.outer(xi, H))
    return 1j * m


def build_p1(pt: PhasePoint, bg: BackgroundEval) -> MatrixSymbol:
    _require_physical(bg)
    return MatrixSymbol(p1_array(bg, pt.xi), 1)


def two_i_ps_array(bg: BackgroundEval, xi) -> np.ndarray:
    """Closed form of ``2i * ps``: real, skew-symmetric, zero diagonal."""
    xi = np.asarray(xi, dtype=float)
    H = bg.H
    gp_ = bg.grad_p
    ghx = _grad_H_dot_xi(bg, xi)
    hx = float(H @ xi)
    nabH = _nabla_otimes_H(bg)
    HnH = bg.jac_H @ H
    return (bg.gamma * (np.outer(xi, gp_) - np.outer(gp_, xi))
            + bg.div_H * (np.outer(xi, H) - np.outer(H, xi))
            + hx * (nabH - nabH.T)
            + (np.outer(HnH, xi) - np.outer(xi, HnH))
            + (np.outer(ghx, H) - np.outer(H, ghx))
            + 2.0 * (np.outer(gp_, xi) - np.outer(xi, gp_)))


def mixed_derivative_p2(bg: BackgroundEval, tau, xi) -> np.ndarray:
    """``sum_j d^2 p2 / dx_j dxi_j`` from the definition.

    ``p2`` is a polynomial of degree two in the background values and in xi,
    so the mixed central difference over the linearized background is exact
    up to rounding for any step; unit steps are used.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        vals = {}
        for sx in (1.0, -1.0):
            rho = bg.rho + sx * bg.grad_rho[j]
            gp = bg.gamma * (bg.p + sx * bg.grad_p[j])
            H = bg.H + sx * bg.jac_H[:, j]
            for sk in (1.0, -1.0):
                vals[sx, sk] = p2_array(rho, gp, H, tau, xi + sk * e)
        out += (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / 4.0
    return out


def subprincipal_definitional(pt: PhasePoint, bg: BackgroundEval) -> np.ndarray:
    """``ps = p1 - (1/2i) sum_j d^2 p2/dx_j dxi_j`` built term by term."""
    _require_physical(bg)
    return p1_array(bg, pt.xi) - mixed_derivative_p2(bg, pt.tau, pt.xi) / 2j


def build_subprincipal(pt: PhasePoint, bg: BackgroundEval) -> MatrixSymbol:
    """Subprincipal symbol ``ps`` from its closed skew-symmetric form."""
    _require_physical(bg)
    return MatrixSymbol(two_i_ps_array(bg, pt.xi) / 2j, 1)


def w2_array(H, xi) -> np.ndarray:
    H = np.asarray(H)
    xi = np.asarray(xi)
    hx = H @ xi
    return (H @ H) * np.outer(xi, xi) + (xi @ xi) * np.outer(H, H) - hx * (np.outer(H, xi) + np.outer(xi, H))


def build_w2(bg: BackgroundEval, xi) -> MatrixSymbol:
    """``|H|^2 xi(x)xi + |xi|^2 H(x)H - (H.xi)(H(x)xi + xi(x)H)``; PSD, rank <= 2."""
    return MatrixSymbol(w2_array(bg.H, np.asarray(xi, dtype=float)), 2)


def q_factors(bg: BackgroundEval, tau, xi):
    """Scalar factors ``(q1, q2, q3)`` of ``det p2``."""
    from .spectra import wave_speeds

    ws = wave_speeds(bg, xi)
    n2 = float(np.asarray(xi) @ np.asarray(xi))
    hx = float(bg.H @ xi)
    t2 = tau * tau
    return (bg.rho * t2 - hx * hx,
            bg.rho * (t2 - ws.cs2 * n2),
            bg.rho * (t2 - ws.cf2 * n2))


def q_scale(bg: BackgroundEval, tau, xi) -> float:
    """``rho (tau^2 + c^2|xi|^2 + h^2|xi|^2)``, the natural size of q1..q3."""
    n2 = float(np.asarray(xi) @ np.asarray(xi))
    return bg.rho * tau * tau + (bg.gp + float(bg.H @ bg.H)) * n2


def ptilde_array(bg: BackgroundEval, tau, xi, sheet: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    q1, q2, q3 = q_factors(bg, tau, xi)
    scale = q_scale(bg, tau, xi)
    names = {1: "q1", 2: "q2", 3: "q3"}
    vals = {1: q1, 2: q2, 3: q3}
    for j in (1, 2, 3):
        if j != sheet and abs(vals[j]) < EPS_DEG * scale:
            raise DegenerateMode(f"{names[j]} = 0", f"|{names[j]}|/scale = {abs(vals[j]) / scale:.3g}")
    H = bg.H
    hx = float(H @ xi)
    xx = (bg.gp + float(H @ H)) * np.outer(xi, xi)
    cross = hx * (np.outer(xi, H) + np.outer(H, xi))
    hw = hx * hx * w2_array(H, xi)
    eye = np.eye(3)
    if sheet == 1:
        r = q1 / (q2 * q3)
        return eye + r * xx - r * cross + hw / (q2 * q3)
    if sheet == 2:
        return (q2 / q1) * eye + (xx - cross) / q3 + hw / (q1 * q3)
    if sheet == 3:
        return (q3 / q1) * eye + (xx - cross) / q2 + hw / (q1 * q2)
    raise ValueError(f"sheet must be 1, 2 or 3, got {sheet}")


def build_ptilde(pt: PhasePoint, bg: BackgroundEval, sheet: int) -> MatrixSymbol:
    """Parametrix ``pt2`` with ``pt2 @ p2 = q_sheet * Id_3``.

    Raises
    ------
    DegenerateMode
        If one of the two other factors is (numerically) zero at ``pt``.
    """
    _require_physical(bg)
    check_separation(bg, pt.xi)
    return MatrixSymbol(ptilde_array(bg, pt.tau, pt.xi, sheet), 0)


def check_separation(bg: BackgroundEval, xi, eps: float = 1e-12) -> None:
    """Raise :class:`DegenerateMode` unless the three wave families are disjoint.

    Requires ``xi.H != 0``, ``xi x H != 0`` and ``|H|^2 != rho c^2``, each
    tested relative to the natural scale with tolerance ``eps``.
    """
    xi = np.asarray(xi, dtype=float)
    nx = float(np.linalg.norm(xi))
    nH = float(np.linalg.norm(bg.H))
    if nx * nH == 0.0:
        raise DegenerateMode("xi = 0 or H = 0")
    if abs(float(bg.H @ xi)) <= eps * nx * nH:
        raise DegenerateMode("xi.H = 0")
    if np.linalg.norm(np.cross(xi, bg.H)) <= eps * nx * nH:
        raise DegenerateMode("xi x H = 0")
    H2 = nH * nH
    if abs(H2 - bg.gp) <= eps * (H2 + bg.gp):
        raise DegenerateMode("|H|^2 = rho c^2")
