"""Wave speeds, eigenvalues of ``A(U, xi)``, spectral projectors and kernels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .background import BackgroundEval
from .errors import DegenerateMode, UnclassifiedDegeneracy, ZeroFrequency
from .symbols import MatrixSymbol, PhasePoint, check_separation, q_factors, w2_array

EPS_CLASSIFY = 1e-12


@dataclass(frozen=True)
class WaveSpeeds:
    """Squared phase speeds per unit ``|xi|`` (direction ``xi_hat`` only).

    ``a`` is the signed Alfven projection ``xi_hat.H / sqrt(rho)`` and
    ``b2 = |xi_hat x H|^2 / rho``, so ``h2 = a^2 + b2``.
    """

    cs2: float
    cf2: float
    a: float
    b2: float
    c2: float
    h2: float

    @property
    def cs(self) -> float:
        return math.sqrt(self.cs2)

    @property
    def cf(self) -> float:
        return math.sqrt(self.cf2)

    @property
    def ca(self) -> float:
        return abs(self.a)


def wave_speeds(bg: BackgroundEval, xi) -> WaveSpeeds:
    """Slow and fast magnetosonic speeds in direction ``xi``.

    ``cf2 = ((c^2 + h^2) + sqrt((c^2 - h^2)^2 + 4 b^2 c^2)) / 2`` and ``cs2``
    from the product identity ``cs2 * cf2 = a^2 c^2``, which avoids the
    cancellation of the minus-root form when ``a`` is small.
    """
    xi = np.asarray(xi, dtype=float)
    n = float(np.linalg.norm(xi))
    if n == 0.0:
        raise ZeroFrequency("wave speeds need xi != 0")
    xh = xi / n
    c2 = bg.c2
    h2 = bg.h2
    a = float(bg.H @ xh) / math.sqrt(bg.rho)
    b2 = float(np.sum(np.cross(xh, bg.H) ** 2)) / bg.rho
    rad = math.sqrt((c2 - h2) ** 2 + 4.0 * b2 * c2)
    cf2 = 0.5 * ((c2 + h2) + rad)
    cs2 = max(a * a * c2 / cf2, 0.0)
    return WaveSpeeds(cs2=cs2, cf2=cf2, a=a, b2=b2, c2=c2, h2=h2)


def eigenvalues_A(bg: BackgroundEval, xi) -> np.ndarray:
    """The eight eigenvalues of ``A(U, xi)`` from the closed form, ascending.

    ``0`` (twice), ``+-cs|xi|``, ``+-(xi.H)/sqrt(rho)``, ``+-cf|xi|``.
    """
    ws = wave_speeds(bg, xi)
    n = float(np.linalg.norm(xi))
    alf = float(bg.H @ np.asarray(xi, dtype=float)) / math.sqrt(bg.rho)
    vals = [0.0, 0.0, ws.cs * n, -ws.cs * n, alf, -alf, ws.cf * n, -ws.cf * n]
    return np.sort(np.array(vals))


class CaseTag(str, enum.Enum):
    GENERIC_TRANSVERSE = "i"
    PERPENDICULAR_DEGENERATE = "ii"
    PARALLEL_SUB = "iii-sub"
    PARALLEL_SUPER = "iii-super"


@dataclass(frozen=True)
class MultiplicityCase:
    """Eigenvalue multiplicity pattern of ``A(U, xi)``.

    ``eigenvalues`` holds the distinct values (ascending) and
    ``multiplicities`` their algebraic multiplicities, summing to 8.
    """

    tag: CaseTag
    eigenvalues: tuple
    multiplicities: tuple


def _group(values, tol):
    distinct, mult = [], []
    for v in np.sort(values):
        if distinct and abs(v - distinct[-1]) <= tol:
            mult[-1] += 1
        else:
            distinct.append(float(v))
            mult.append(1)
    return tuple(distinct), tuple(mult)


def multiplicity_case(bg: BackgroundEval, xi) -> MultiplicityCase:
    """Classify ``xi`` into the eigenvalue cases (i), (ii), (iii).

    ``xi.H`` and ``xi x H`` count as zero below ``1e-12 |xi||H|``.

    Raises
    ------
    UnclassifiedDegeneracy
        If ``xi`` is parallel to ``H`` and ``|H|^2 = rho c^2`` to the same
        relative tolerance (the triple crossing), or ``H = 0``.
    """
    xi = np.asarray(xi, dtype=float)
    nx = float(np.linalg.norm(xi))
    if nx == 0.0:
        raise ZeroFrequency("multiplicity case needs xi != 0")
    nH = float(np.linalg.norm(bg.H))
    if nH == 0.0:
        raise UnclassifiedDegeneracy("H = 0 lies outside the case analysis")
    H2 = nH * nH
    dot0 = abs(float(bg.H @ xi)) <= EPS_CLASSIFY * nx * nH
    cross0 = float(np.linalg.norm(np.cross(xi, bg.H))) <= EPS_CLASSIFY * nx * nH
    if dot0:
        tag = CaseTag.PERPENDICULAR_DEGENERATE
    elif cross0:
        if abs(H2 - bg.gp) <= EPS_CLASSIFY * (H2 + bg.gp):
            raise UnclassifiedDegeneracy("xi parallel to H with |H|^2 = rho c^2 (triple crossing)")
        tag = CaseTag.PARALLEL_SUB if H2 < bg.gp else CaseTag.PARALLEL_SUPER
    else:
        tag = CaseTag.GENERIC_TRANSVERSE
    lam = eigenvalues_A(bg, xi)
    scale = 1.0 + float(np.max(np.abs(lam)))
    distinct, mult = _group(lam, 1e-9 * scale)
    return MultiplicityCase(tag, distinct, mult)


@dataclass(frozen=True, eq=False)
class ProjectorTriple:
    pi1: MatrixSymbol
    pi2: MatrixSymbol
    pi3: MatrixSymbol

    def __iter__(self):
        return iter((self.pi1, self.pi2, self.pi3))

    def __getitem__(self, sheet: int) -> MatrixSymbol:
        return (self.pi1, self.pi2, self.pi3)[sheet - 1]


def projector_arrays(bg: BackgroundEval, xi):
    """Raw ``(pi1, pi2, pi3)``; depend on ``(x, xi)`` only, not on tau."""
    xi = np.asarray(xi, dtype=float)
    ws = wave_speeds(bg, xi)
    n2 = float(xi @ xi)
    H = bg.H
    hx = float(H @ xi)
    W = w2_array(H, xi)
    B = (bg.gp + float(H @ H)) * np.outer(xi, xi) - hx * (np.outer(xi, H) + np.outer(H, xi))
    rcs = bg.rho * ws.cs2 * n2
    rcf = bg.rho * ws.cf2 * n2
    pi1 = np.eye(3) + W / (hx * hx - float(H @ H) * n2)
    pi2 = (B + hx * hx * W / (rcs - hx * hx)) / (rcs - rcf)
    pi3 = (B + hx * hx * W / (rcf - hx * hx)) / (rcf - rcs)
    return pi1, pi2, pi3


def build_projectors(pt: PhasePoint, bg: BackgroundEval) -> ProjectorTriple:
    """Orthogonal projectors onto the Alfven, slow and fast polarizations.

    ``p2 = q1 pi1 + q2 pi2 + q3 pi3`` with ``pi1 + pi2 + pi3 = Id_3``.

    Raises
    ------
    DegenerateMode
        Naming the violated separation hypothesis.
    """
    check_separation(bg, pt.xi)
    return ProjectorTriple(*(MatrixSymbol(m, 0) for m in projector_arrays(bg, pt.xi)))


def sheet_projector(bg: BackgroundEval, xi, sheet: int) -> np.ndarray:
    return projector_arrays(bg, xi)[sheet - 1]


def kernel_basis(M, tolFactor: float = 1e-10) -> list:
    """Orthonormal basis of the numerical kernel of a square matrix.

    Right singular vectors whose singular value is at most
    ``tolFactor * sigma_max``.  An all-zero matrix has the full space as kernel.
    """
    M = np.asarray(M)
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    keep = s <= tolFactor * smax if smax > 0 else np.ones_like(s, dtype=bool)
    return [vh[i].conj() for i in np.flatnonzero(keep)]


def cokernel_basis(M, tolFactor: float = 1e-10) -> list:
    """Orthonormal basis of the complement of the range of ``M``."""
    return kernel_basis(np.asarray(M).conj().T, tolFactor)


def speed_gap(bg: BackgroundEval, xi) -> float:
    """Relative gap ``min(cf - ca, ca - cs) / cf`` between the wave speeds.

    The projectors vary on this scale in ``xi`` near a crossing.
    """
    ws = wave_speeds(bg, xi)
    cf, cs = math.sqrt(ws.cf2), math.sqrt(max(ws.cs2, 0.0))
    ca = abs(ws.a)
    return min(cf - ca, ca - cs) / cf


def sheet_factor(bg: BackgroundEval, tau: float, xi, sheet: int) -> float:
    return q_factors(bg, tau, xi)[sheet - 1]


def sheet_tau(bg: BackgroundEval, xi, sheet: int, sign: float = 1.0) -> float:
    """The tau with ``q_sheet(tau, xi) = 0`` and the requested sign."""
    xi = np.asarray(xi, dtype=float)
    n = float(np.linalg.norm(xi))
    if sheet not in (1, 2, 3):
        raise ValueError(f"sheet must be 1, 2 or 3, got {sheet}")
    if sheet == 1:
        speed = abs(float(bg.H @ xi)) / math.sqrt(bg.rho)
    else:
        ws = wave_speeds(bg, xi)
        speed = (ws.cs if sheet == 2 else ws.cf) * n
    if speed == 0.0:
        raise DegenerateMode(f"q{sheet} has a zero root in tau")
    return math.copysign(speed, sign)
