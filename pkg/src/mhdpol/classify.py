"""Position of a phase point in the characteristic variety of ``q = tau + A``.

The variety is the union of seven sheets ``S1..S7``.  Away from their
intersections the system is of real principal type; two intersections are
singled out: the uniaxial one (``xi || H``, Alfven and slow or fast sheets
touching) and the MHD-type one (``tau = 0, xi.H = 0`` where five sheets meet).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .background import BackgroundEval
from .errors import NotOnCharacteristic, WrongRegime, ZeroFrequency
from .spectra import EPS_CLASSIFY, cokernel_basis, eigenvalues_A, kernel_basis, wave_speeds
from .symbols import A_array, PhasePoint, build_q, dA_dx, det_q, det_q_many

EPS_SHEET = 1e-10
KERNEL_MAP_FLOOR = 1e-6
ROUNDING_SNAP = 64 * np.finfo(float).eps

SHEET_NAMES = ("S1", "S2", "S3", "S4", "S5", "S6", "S7")


class Regime(str, enum.Enum):
    ELLIPTIC = "Elliptic"
    REAL_PRINCIPAL = "RealPrincipalType"
    UNIAXIAL = "UniaxialSigma2"
    MHD = "MHDTypeSigma2"
    EXCLUDED = "Excluded"


@dataclass(frozen=True)
class SheetSet:
    """Membership of a point in ``S1..S7`` with the scaled residuals."""

    residuals: tuple
    tol: float = EPS_SHEET

    @property
    def flags(self) -> tuple:
        return tuple(r <= self.tol for r in self.residuals)

    @property
    def members(self) -> tuple:
        return tuple(i + 1 for i, f in enumerate(self.flags) if f)

    def __contains__(self, j: int) -> bool:
        return self.flags[j - 1]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    witnesses: dict = field(default_factory=dict)
    kernelDim: int = 0
    vanishingOrder: int | None = None
    sheets: tuple = ()


def _require_xi(pt: PhasePoint) -> float:
    n = float(np.linalg.norm(pt.xi))
    if n == 0.0:
        raise ZeroFrequency("classification needs xi != 0")
    return n


def sheet_membership(pt: PhasePoint, bg: BackgroundEval, tol: float = EPS_SHEET) -> SheetSet:
    n = _require_xi(pt)
    ws = wave_speeds(bg, pt.xi)
    alf = float(bg.H @ pt.xi) / math.sqrt(bg.rho)
    tau = pt.tau
    scale = abs(tau) + (math.sqrt(ws.c2) + math.sqrt(ws.h2)) * n + 1.0
    q = (tau,
         tau - ws.cs * n, tau + ws.cs * n,
         tau - alf, tau + alf,
         tau - ws.cf * n, tau + ws.cf * n)
    return SheetSet(tuple(abs(v) / scale for v in q), tol)


def witnesses(pt: PhasePoint, bg: BackgroundEval) -> dict:
    n = float(np.linalg.norm(pt.xi))
    ws = wave_speeds(bg, pt.xi)
    H2 = float(bg.H @ bg.H)
    return {
        "tau": pt.tau,
        "xi_dot_H": float(bg.H @ pt.xi),
        "xi_cross_H": float(np.linalg.norm(np.cross(pt.xi, bg.H))),
        "H2_minus_rho_c2": H2 - bg.gp,
        "cs_xi": ws.cs * n,
        "alfven_xi": abs(float(bg.H @ pt.xi)) / math.sqrt(bg.rho),
        "cf_xi": ws.cf * n,
        "tau2_minus_cf2_xi2": pt.tau ** 2 - ws.cf2 * n * n,
    }


def classify_point(pt: PhasePoint, bg: BackgroundEval) -> RegimeReport:
    """Decide the propagation regime at ``pt``.

    Elliptic off the variety; real principal type on exactly one sheet;
    ``UniaxialSigma2`` where ``xi x H = 0, |H|^2 != rho c^2, tau = +-|xi||H|/sqrt(rho)``;
    ``MHDTypeSigma2`` where ``tau = 0, xi.H = 0``; anything else is ``Excluded``.
    """
    bg.check_physical()
    n = _require_xi(pt)
    sheets = sheet_membership(pt, bg)
    wit = witnesses(pt, bg)
    nH = float(np.linalg.norm(bg.H))
    members = sheets.members
    kdim = len(kernel_basis(build_q(pt, bg).entries))

    if not members:
        return RegimeReport(Regime.ELLIPTIC, wit, kdim, 0, members)

    order = vanishing_order(pt, bg)
    dot0 = abs(wit["xi_dot_H"]) <= EPS_CLASSIFY * n * nH
    cross0 = wit["xi_cross_H"] <= EPS_CLASSIFY * n * nH
    hc_equal = abs(wit["H2_minus_rho_c2"]) <= EPS_CLASSIFY * (nH * nH + bg.gp)
    tau0 = 1 in sheets
    on_cf = 6 in sheets or 7 in sheets

    if nH == 0.0:
        regime = Regime.EXCLUDED
    elif len(members) == 1:
        regime = Regime.REAL_PRINCIPAL
    elif tau0 and dot0 and not on_cf:
        regime = Regime.MHD
    elif cross0 and not hc_equal and not tau0 and (4 in sheets or 5 in sheets):
        regime = Regime.UNIAXIAL
    else:
        regime = Regime.EXCLUDED
    return RegimeReport(regime, wit, kdim, order, members)


_DIRECTIONS = None


def _directions() -> np.ndarray:
    global _DIRECTIONS
    if _DIRECTIONS is None:
        d = np.random.default_rng(20240611).normal(size=(32, 4))
        _DIRECTIONS = d / np.linalg.norm(d, axis=1, keepdims=True)
    return _DIRECTIONS


def vanishing_order(pt: PhasePoint, bg: BackgroundEval, maxOrder: int = 8, radii=(1e-2, 5e-3, 2.5e-3)):
    """Order of vanishing of ``det q`` at a characteristic point.

    ``det q`` is sampled along 32 fixed pseudo-random unit directions in
    ``(tau, xi)`` at the given radii.  Radii are relative to a local length:
    the distance from ``tau`` to the nearest eigenvalue of ``-A`` that does
    not vanish there, capped by ``|tau| + cf|xi|``; xi steps are divided by
    ``cf`` so both coordinates carry units of tau.  Per direction the two
    local log-log slopes are combined by Richardson extrapolation; directions
    whose slopes disagree by more than 0.05 have not reached the asymptotic
    regime and are skipped.  The minimum over the remaining directions,
    rounded, is returned; ``None`` when it is not within 0.1 of an integer,
    exceeds ``maxOrder`` or no direction qualifies.

    Raises
    ------
    NotOnCharacteristic
        If ``|det q(pt)| / scale^8 > 1e-9``.
    """
    n = _require_xi(pt)
    ws = wave_speeds(bg, pt.xi)
    speed_scale = abs(pt.tau) + (math.sqrt(ws.c2) + math.sqrt(ws.h2)) * n
    if abs(det_q(pt, bg)) / speed_scale ** 8 > 1e-9:
        raise NotOnCharacteristic("det q does not vanish at the point")
    outer = abs(pt.tau) + ws.cf * n
    gaps = np.abs(eigenvalues_A(bg, pt.xi) + pt.tau)
    gaps = gaps[gaps > 1e-8 * outer]
    ell = min(outer, float(gaps.min())) if gaps.size else outer
    step = np.array([ell, *(ell / ws.cf,) * 3])
    base = np.concatenate([[pt.tau], pt.xi])
    logr = np.log(np.asarray(radii, dtype=float))
    pts = base + (np.asarray(radii, dtype=float)[None, :, None] * step) * _directions()[:, None, :]
    flat = pts.reshape(-1, 4)
    vals = np.abs(det_q_many(bg, flat[:, 0], flat[:, 1:])).reshape(len(_directions()), len(radii))
    estimates = []
    for row in vals:
        if row.min() == 0.0:
            continue
        logv = np.log(row)
        s1 = (logv[0] - logv[1]) / (logr[0] - logr[1])
        s2 = (logv[1] - logv[2]) / (logr[1] - logr[2])
        if abs(s1 - s2) <= 0.05:
            estimates.append(2.0 * s2 - s1)
    if not estimates:
        return None
    m = min(estimates)
    k = int(round(m))
    if abs(m - k) > 0.1 or k > maxOrder:
        return None
    return k


def tangent_generators(pt: PhasePoint, bg: BackgroundEval, regime) -> list:
    """Spanning fields of the tangent space of the variety at its singular stratum.

    Each field is returned as coefficients in the basis
    ``(d_t, d_x1, d_x2, d_x3, d_tau, d_xi1, d_xi2, d_xi3)`` evaluated at ``pt``.
    Thirteen fields in the uniaxial regime, fourteen in the MHD regime.
    """
    regime = Regime(regime)
    tau = pt.tau
    xi = pt.xi
    H = bg.H
    hx = float(H @ xi)
    # the stratum equations tau = 0 and xi.H = 0 hold only to rounding at a
    # constructed point; snap such coefficients to their exact value
    nx = float(np.linalg.norm(xi))
    if abs(hx) <= ROUNDING_SNAP * nx * float(np.linalg.norm(H)):
        hx = 0.0
    if abs(tau) <= ROUNDING_SNAP * nx * math.sqrt(bg.c2 + bg.h2):
        tau = 0.0
    gens = []

    def vec(t=0.0, x=(0, 0, 0), dtau=0.0, dxi=(0, 0, 0)):
        return np.concatenate([[t], np.asarray(x, float), [dtau], np.asarray(dxi, float)])

    if regime is Regime.UNIAXIAL:
        n2 = float(xi @ xi)
        gens += [
            vec(dxi=(xi[1], -xi[0], 0)),
            vec(dxi=(xi[2], 0, -xi[0])),
            vec(dxi=(0, -xi[2], xi[1])),
            vec(dxi=(H[1], -H[0], 0)),
            vec(dxi=(-H[2], 0, H[0])),
            vec(dxi=(0, -H[2], H[1])),
            vec(t=1.0),
        ]
        for k in range(3):
            gens.append(vec(dtau=xi[k] * tau, dxi=n2 * np.eye(3)[k]))
        for k in range(3):
            gens.append(vec(dtau=tau * H[k], dxi=hx * np.eye(3)[k]))
        return gens
    if regime is Regime.MHD:
        e = np.eye(3)
        gens += [vec(dxi=xi), vec(dtau=tau), vec(t=1.0)]
        gens += [vec(dxi=tau * e[k]) for k in range(3)]
        gens += [vec(x=tau * e[k]) for k in range(3)]
        gens += [vec(x=hx * e[k]) for k in range(3)]
        gens += [vec(dxi=hx * e[0]), vec(dxi=hx * e[2])]
        return gens
    raise WrongRegime(f"no generator list for regime {regime.value}")


def derivative_of_q(pt: PhasePoint, bg: BackgroundEval, v) -> np.ndarray:
    """Directional derivative of ``q`` along the phase-space vector ``v``.

    The background is stationary, so the ``d_t`` component contributes nothing;
    ``d_x`` acts through the background only.
    """
    v = np.asarray(v, dtype=float)
    out = v[4] * np.eye(8)
    e = np.eye(3)
    for k in range(3):
        if v[5 + k] != 0.0:
            out = out + v[5 + k] * A_array(bg.rho, bg.gp, bg.H, e[k])
    if np.any(v[1:4] != 0.0) and not bg.is_constant():
        dAx = dA_dx(bg, pt.xi)
        for k in range(3):
            out = out + v[1 + k] * dAx[k]
    return out


def check_kernel_mapping(pt: PhasePoint, bg: BackgroundEval, regime, anchor: PhasePoint | None = None,
                         modulo_image: bool = True) -> float:
    """Largest scaled failure of ``D_j q : ker q -> Im q``.

    For every generator ``D_j`` at ``pt`` and every kernel vector ``nu`` of
    ``q(anchor)`` (``anchor`` defaults to ``pt``), the part of ``(D_j q) nu``
    outside the range of ``q(anchor)`` is measured and divided by
    ``|D_j q| |nu|``.  With ``modulo_image=False`` the raw ``|(D_j q) nu|`` is
    used instead.  Pass a point on the singular stratum as ``anchor`` and a
    perturbed ``pt`` to build a negative control.

    Generator coefficients that vanish on the stratum (``tau``, ``xi.H``) are
    only zero to rounding at a numerically constructed point; the
    denominator therefore carries a floor of ``1e-6`` times the largest
    ``|D_j q|`` so such rounding-size generators do not count as O(1).
    """
    gens = tangent_generators(pt, bg, regime)
    anchor = pt if anchor is None else anchor
    q = build_q(anchor, bg).entries
    K = kernel_basis(q)
    if not K:
        raise NotOnCharacteristic("q has a trivial kernel at the anchor point")
    L = np.array(cokernel_basis(q))
    Dqs = [derivative_of_q(pt, bg, v) for v in gens]
    norms = [float(np.linalg.norm(Dq, 2)) for Dq in Dqs]
    floor = KERNEL_MAP_FLOOR * max(norms)
    worst = 0.0
    for Dq, norm in zip(Dqs, norms):
        for nu in K:
            r = Dq @ nu
            if modulo_image:
                r = L.conj() @ r
            nn = float(np.linalg.norm(nu))
            worst = max(worst, float(np.linalg.norm(r)) / ((norm + floor) * nn + 1e-300))
    return worst


def kernel_mapping_control(pt: PhasePoint, bg: BackgroundEval, regime, shift: float = 0.1) -> float:
    """Negative control for :func:`check_kernel_mapping`.

    Moves ``tau`` off the stratum by ``shift`` times the frequency scale
    ``|xi| sqrt(c^2 + h^2)`` and measures against the kernel at ``pt``.
    A healthy check reports a value far above the on-stratum residual.
    """
    s = float(np.linalg.norm(pt.xi)) * math.sqrt(bg.c2 + bg.h2)
    return check_kernel_mapping(pt.replace(tau=pt.tau + shift * s), bg, regime, anchor=pt)
