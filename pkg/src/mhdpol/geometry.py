"""Hamilton fields, bicharacteristics and polarization transport.

Rays use the canonical Hamiltonian parameter ``s`` of a scalar sheet factor
``q_j`` of ``det p2``, so ``dt/ds = d_tau q_j`` rather than 1.  Phase-space
vectors are ordered ``(t, x1, x2, x3, tau, xi1, xi2, xi3)`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import dual
from .background import BackgroundEval, eval_background
from .errors import DegenerateMode, MhdpolError, NotInKernel, NotOnSheet, RadicalDegenerate, RayStopped
from .spectra import sheet_projector, sheet_tau, speed_gap
from .symbols import PhasePoint, build_subprincipal, p2_array, ptilde_array, q_scale

RADICAL_EPS = 1e-14
SEPARATION_STOP = 1e-8
SHEET_TOL = 1e-8
KERNEL_TOL = 1e-8


def _sheet_q(sheet: int, rho, gp, H, tau, xi):
    """``q_sheet`` in plain arithmetic so floats and duals both work.

    Returns ``(q, radical, radical_scale)``; the last two are ``None`` on sheet 1.
    """
    hx = H[0] * xi[0] + H[1] * xi[1] + H[2] * xi[2]
    if sheet == 1:
        return rho * tau * tau - hx * hx, None, None
    n2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    H2 = H[0] * H[0] + H[1] * H[1] + H[2] * H[2]
    cross2 = H2 * n2 - hx * hx
    C = gp * n2 / rho
    Hh = H2 * n2 / rho
    B = cross2 / rho
    rad = (C - Hh) * (C - Hh) + 4.0 * B * C
    scale = C + Hh
    if dual.value(rad) <= RADICAL_EPS * dual.value(scale) ** 2:
        raise RadicalDegenerate(f"radical argument {dual.value(rad):.3g} at the resolution limit")
    fast = 0.5 * (scale + dual.sqrt(rad))
    if sheet == 3:
        return rho * (tau * tau - fast), rad, scale
    if sheet == 2:
        # slow speed from cs^2 cf^2 = a^2 c^2, stable when xi.H is small
        return rho * tau * tau - C * hx * hx / fast, rad, scale
    raise ValueError(f"sheet must be 1, 2 or 3, got {sheet}")


def sheet_q(sheet: int, pt: PhasePoint, bg: BackgroundEval) -> float:
    """Value of the sheet factor ``q1``, ``q2`` or ``q3`` at ``pt``."""
    return float(_sheet_q(sheet, bg.rho, bg.gp, bg.H, pt.tau, pt.xi)[0])


def hamilton_field(sheet: int, pt: PhasePoint, bg: BackgroundEval) -> np.ndarray:
    """Hamilton vector field of ``q_sheet`` at ``pt``.

    ``(d_tau q, d_xi q, -d_t q, -d_x q)``; the background is stationary so the
    third slot is zero.  Derivatives are exact (forward-mode AD through the
    background gradients carried by ``bg``).

    Raises
    ------
    RadicalDegenerate
        On sheets 2 and 3 when ``(c^2-h^2)^2|xi|^4 + 4 b^2 c^2 |xi|^2`` is below
        ``1e-14 (c^2+h^2)^2 |xi|^4``.
    """
    n = 7
    zx = np.zeros(4)
    rho = dual.Dual(bg.rho, np.concatenate([bg.grad_rho, zx]))
    gp = dual.Dual(bg.gp, np.concatenate([bg.gamma * bg.grad_p, zx]))
    H = [dual.Dual(bg.H[k], np.concatenate([bg.jac_H[k], zx])) for k in range(3)]
    tau = dual.Dual.variable(pt.tau, 3, n)
    xi = [dual.Dual.variable(pt.xi[k], 4 + k, n) for k in range(3)]
    g = dual.gradient(_sheet_q(sheet, rho, gp, H, tau, xi)[0], n)
    return np.concatenate([[g[3]], g[4:7], [0.0], -g[0:3]])


def _bg_at(B, t: float, x) -> BackgroundEval:
    if isinstance(B, BackgroundEval):
        return B
    return eval_background(B, t, x)


def hamilton_field_fd(sheet: int, pt: PhasePoint, B, h: float = 1e-6) -> np.ndarray:
    """Hamilton field from central differences of ``q_sheet``; an oracle."""
    z = pt.as_array()
    scale = np.concatenate([np.full(4, 1.0), np.full(4, abs(pt.tau) + np.linalg.norm(pt.xi))])
    grad = np.empty(8)
    for i in range(8):
        dz = np.zeros(8)
        dz[i] = h * scale[i]
        vals = []
        for sgn in (1.0, -1.0):
            p = PhasePoint.from_array(z + sgn * dz)
            vals.append(sheet_q(sheet, p, _bg_at(B, p.t, p.x)))
        grad[i] = (vals[0] - vals[1]) / (2.0 * dz[i])
    return np.concatenate([grad[4:8], -grad[0:4]])


# ---------------------------------------------------------------------------
# rays


@dataclass(frozen=True, eq=False)
class Ray:
    """A sampled bicharacteristic of ``q_sheet``.

    ``points[i]`` is the phase point at parameter ``s[i]``.
    """

    sheet: int
    s: np.ndarray
    points: np.ndarray
    qDrift: float
    stepStats: dict = field(default_factory=dict)
    background: object = None
    tol: float = 1e-9

    @property
    def samples(self) -> list:
        return [(float(s), PhasePoint.from_array(z)) for s, z in zip(self.s, self.points)]

    def __len__(self) -> int:
        return len(self.s)


def _separation_margin(sheet: int, bg: BackgroundEval, xi) -> float:
    nx = float(np.linalg.norm(xi))
    nH = float(np.linalg.norm(bg.H))
    if nx * nH == 0.0:
        return -1.0
    dot = abs(float(bg.H @ xi)) / (nx * nH)
    cross = float(np.linalg.norm(np.cross(xi, bg.H))) / (nx * nH)
    H2 = nH * nH
    hc = abs(H2 - bg.gp) / (H2 + bg.gp)
    return min(dot, cross, hc) - SEPARATION_STOP


def _drift(sheet: int, z, B) -> float:
    pt = PhasePoint.from_array(z)
    bg = _bg_at(B, pt.t, pt.x)
    return abs(sheet_q(sheet, pt, bg)) / q_scale(bg, pt.tau, pt.xi)


def _separation_parts(bg: BackgroundEval, xi):
    """Signed ``xi.H``, ``|xi x H|`` and signed ``|H|^2 - rho c^2``, all relative."""
    nx = float(np.linalg.norm(xi))
    nH = float(np.linalg.norm(bg.H))
    if nx * nH == 0.0:
        return 0.0, 0.0, 0.0
    dot = float(bg.H @ xi) / (nx * nH)
    cross = np.cross(xi, bg.H) / (nx * nH)
    H2 = nH * nH
    return dot, cross, (H2 - bg.gp) / (H2 + bg.gp)


def _integrate(rhs, y0, span, tol, nSamples, events, B, sheet, extra_dim=0):
    """Shared RK45 driver; returns ``(s, Y, stats, stop_reason)``.

    Events flagged ``closest`` are non-terminal; the run is cut at the first
    one whose ``level`` function is not positive there.
    """
    atol = tol * 1e-2 * (1.0 + float(np.max(np.abs(y0[:8]))))
    stop = {}

    def fun(s, y):
        try:
            return rhs(s, y)
        except (MhdpolError, ArithmeticError) as exc:
            stop.setdefault("reason", f"{type(exc).__name__}: {exc}")
            stop.setdefault("s", s)
            raise _Abort() from exc

    try:
        sol = solve_ivp(fun, (0.0, span), y0, method="RK45", rtol=tol, atol=atol,
                        dense_output=True, events=events)
    except _Abort:
        sol = None
    if sol is None or sol.status == -1:
        if sol is not None and "reason" not in stop:
            stop["reason"] = sol.message
        return None, None, {}, stop
    s_end = float(sol.t[-1])
    for ev, ts, ys in zip(events, sol.t_events, sol.y_events):
        if getattr(ev, "closest", False):
            hits = [t for t, y in zip(ts, ys) if ev.level(t, y) <= 0.0]
            if hits and hits[0] < s_end:
                s_end = float(hits[0])
                stop["reason"] = ev.reason
                stop["s"] = s_end
    s = np.linspace(0.0, s_end, max(nSamples, 64))
    Y = sol.sol(s).T
    stats = {"nfev": int(sol.nfev), "nsteps": int(len(sol.t) - 1)}
    if sol.status == 1 and "reason" not in stop:
        fired = [ev.reason for ev, ts in zip(events, sol.t_events)
                 if len(ts) and ts[-1] == sol.t[-1] and not getattr(ev, "closest", False)]
        stop["reason"] = fired[0] if fired else "entered a degenerate region"
        stop["s"] = s_end
    return s, Y, stats, stop


class _Abort(Exception):
    pass


def _ray_events(sheet, B):
    """Stopping events for the separation hypotheses along a ray.

    ``xi.H`` and ``|H|^2 - rho c^2`` change sign where they vanish, so signed
    events catch every crossing.  ``|xi x H|`` does not, so it gets a level
    event plus a closest-approach event (zero of ``d/ds |xi x H|^2``).
    """
    def parts(y):
        pt = PhasePoint.from_array(y[:8])
        try:
            return _separation_parts(_bg_at(B, pt.t, pt.x), pt.xi)
        except (MhdpolError, ArithmeticError):
            return 0.0, np.zeros(3), 0.0

    def dot(s, y):
        return parts(y)[0]

    def hc(s, y):
        return parts(y)[2]

    def cross_level(s, y):
        return float(np.linalg.norm(parts(y)[1])) - SEPARATION_STOP

    def cross_closest(s, y):
        c = parts(y)[1]
        pt = PhasePoint.from_array(y[:8])
        v = hamilton_field(sheet, pt, _bg_at(B, pt.t, pt.x))
        eps = 1e-7 * (1.0 + float(np.linalg.norm(y[:8]))) / max(float(np.linalg.norm(v)), 1e-300)
        c2 = parts(np.asarray(y[:8]) + eps * v)[1]
        return float(c @ (c2 - c)) / eps

    for ev, reason in ((dot, "xi.H reached zero"), (hc, "|H|^2 reached rho c^2"),
                       (cross_level, "xi x H reached zero")):
        ev.terminal = True
        ev.reason = reason
    cross_level.direction = -1
    cross_closest.terminal = False
    cross_closest.direction = 1
    cross_closest.closest = True
    cross_closest.level = cross_level
    cross_closest.reason = "xi x H reached zero"
    return [dot, hc, cross_level, cross_closest]


def _prepare_start(start: PhasePoint, sheet: int, B, project: bool) -> PhasePoint:
    bg = _bg_at(B, start.t, start.x)
    if _separation_margin(sheet, bg, start.xi) <= 0.0:
        raise DegenerateMode("start point violates the separation hypotheses",
                             "xi.H, xi x H and |H|^2 - rho c^2 must be non-zero")
    r = abs(sheet_q(sheet, start, bg)) / q_scale(bg, start.tau, start.xi)
    if r > SHEET_TOL:
        if not project:
            raise NotOnSheet(f"|q{sheet}|/scale = {r:.3g} at the start point")
        start = start.replace(tau=sheet_tau(bg, start.xi, sheet, 1.0 if start.tau >= 0 else -1.0))
    return start


def trace_ray(start: PhasePoint, sheet: int, B, span: float = 1.0, tol: float = 1e-9,
              nSamples: int = 64, project: bool = False) -> Ray:
    """Integrate the Hamilton flow of ``q_sheet`` from ``start`` over ``[0, span]``.

    Parameters
    ----------
    B : BackgroundField or BackgroundEval
        A ``BackgroundEval`` is treated as a constant background.
    project : bool
        Move ``start`` onto the sheet along tau (keeping the sign of tau)
        instead of raising :class:`NotOnSheet`.

    Raises
    ------
    NotOnSheet
        If ``|q_sheet(start)| > 1e-8 * scale`` and ``project`` is false.
    RayStopped
        When the ray reaches a point where the sheets are no longer separated
        or a sheet factor is not differentiable; ``exc.ray`` holds the part
        traced so far.
    """
    start = _prepare_start(start, sheet, B, project)

    def rhs(s, y):
        pt = PhasePoint.from_array(y)
        return hamilton_field(sheet, pt, _bg_at(B, pt.t, pt.x))

    s, Y, stats, stop = _integrate(rhs, start.as_array(), span, tol, nSamples,
                                   _ray_events(sheet, B), B, sheet)
    if s is None:
        raise RayStopped(stop.get("reason", "integration failed"), stop.get("s", 0.0), None)
    drift = max(_drift(sheet, z, B) for z in Y)
    ray = Ray(sheet, s, Y, drift, stats, B, tol)
    if stop:
        raise RayStopped(stop["reason"], float(s[-1]), ray)
    return ray


# ---------------------------------------------------------------------------
# brackets


GAP_FLOOR = 1e-4


def _gap_factor(pt: PhasePoint, B) -> float:
    try:
        return max(GAP_FLOOR, min(1.0, speed_gap(_bg_at(B, pt.t, pt.x), pt.xi)))
    except MhdpolError:
        return 1.0


def _fd_steps(pt: PhasePoint, h: float) -> np.ndarray:
    freq = abs(pt.tau) + float(np.linalg.norm(pt.xi))
    return h * np.concatenate([[1.0 + abs(pt.t)], 1.0 + np.abs(pt.x), np.full(4, freq)])


def _partials(funcs, pt: PhasePoint, B, h: float):
    """Central-difference partials of each symbol function in all eight coordinates.

    Steps shrink with the relative gap between wave speeds, the scale on
    which the projectors and the parametrix vary near a crossing.
    """
    z = pt.as_array()
    steps = _fd_steps(pt, h * _gap_factor(pt, B))
    out = [[None] * 8 for _ in funcs]
    for i in range(8):
        vals = []
        for sgn in (1.0, -1.0):
            p = PhasePoint.from_array(z + sgn * steps[i] * np.eye(8)[i])
            bg = _bg_at(B, p.t, p.x)
            vals.append([np.asarray(f(p, bg)) for f in funcs])
        for j in range(len(funcs)):
            out[j][i] = (vals[0][j] - vals[1][j]) / (2.0 * steps[i])
    return out


def _mul(a, b):
    return a @ b if np.ndim(a) == 2 and np.ndim(b) == 2 else a * b


def poisson_bracket_matrix(F, G, pt: PhasePoint, B, h: float = 1e-5) -> np.ndarray:
    """``{F, G}`` of two matrix-valued symbols by central differences.

    ``F`` and ``G`` are callables ``(PhasePoint, BackgroundEval) -> array``.
    ``{F,G} = d_tau F d_t G - d_t F d_tau G + sum_k (d_xik F d_xk G - d_xk F d_xik G)``
    with matrix products in that order.
    """
    dF, dG = _partials((F, G), pt, B, h)
    out = _mul(dF[4], dG[0]) - _mul(dF[0], dG[4])
    for k in range(3):
        out = out + _mul(dF[5 + k], dG[1 + k]) - _mul(dF[1 + k], dG[5 + k])
    return out


def ptilde_fn(sheet: int):
    return lambda p, bg: ptilde_array(bg, p.tau, p.xi, sheet)


def p2_fn(p: PhasePoint, bg: BackgroundEval) -> np.ndarray:
    return p2_array(bg.rho, bg.gp, bg.H, p.tau, p.xi)


def projector_fn(sheet: int):
    return lambda p, bg: sheet_projector(bg, p.xi, sheet)


def hamilton_derivative(M, sheet: int, pt: PhasePoint, B, h: float = 1e-5) -> np.ndarray:
    """``H_q M``: derivative of the symbol ``M`` along the Hamilton field of ``q_sheet``."""
    bg = _bg_at(B, pt.t, pt.x)
    V = hamilton_field(sheet, pt, bg)
    z = pt.as_array()
    eps = h * _gap_factor(pt, B) * float(np.linalg.norm(z)) / float(np.linalg.norm(V))
    vals = []
    for sgn in (1.0, -1.0):
        p = PhasePoint.from_array(z + sgn * eps * V)
        vals.append(np.asarray(M(p, _bg_at(B, p.t, p.x))))
    return (vals[0] - vals[1]) / (2.0 * eps)


# ---------------------------------------------------------------------------
# polarization transport


@dataclass(frozen=True, eq=False)
class PolarizationFrame:
    """Transported polarization along a ray.

    ``w[i]`` is the transported vector at ``s[i]``; ``direction[i]`` the unit
    vector with the phase fixed so its largest component is real positive.
    """

    s: np.ndarray
    points: np.ndarray
    w: np.ndarray
    direction: np.ndarray
    kernelResidual: np.ndarray
    projectorResidual: np.ndarray
    norm: np.ndarray

    @property
    def maxKernelResidual(self) -> float:
        return float(np.max(self.kernelResidual))


def canonical_direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    u = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(u)))
    return u * (abs(u[k]) / u[k])


def direction_distance(u, v) -> float:
    """Sine of the angle between two complex lines (phase invariant)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.sqrt(max(0.0, 1.0 - c * c))


def kernel_residual(pt: PhasePoint, bg: BackgroundEval, w) -> float:
    p = p2_fn(pt, bg)
    return float(np.linalg.norm(p @ w) / (np.linalg.norm(p, 2) * np.linalg.norm(w)))


def _check_kernel(ray: Ray, w0) -> np.ndarray:
    pt = PhasePoint.from_array(ray.points[0])
    bg = _bg_at(ray.background, pt.t, pt.x)
    if w0 is None:
        w0 = initial_polarization(pt, bg)
    w0 = np.asarray(w0, dtype=complex).reshape(3)
    r = kernel_residual(pt, bg, w0)
    if r > KERNEL_TOL:
        raise NotInKernel(f"initial polarization has kernel residual {r:.3g}")
    return w0


def _frame(ray: Ray, s, Y) -> PolarizationFrame:
    pts = Y[:, :8]
    w = Y[:, 8:11] + 1j * Y[:, 11:14]
    kres, pres = [], []
    for z, wi in zip(pts, w):
        pt = PhasePoint.from_array(z)
        bg = _bg_at(ray.background, pt.t, pt.x)
        kres.append(kernel_residual(pt, bg, wi))
        pi = sheet_projector(bg, pt.xi, ray.sheet)
        pres.append(float(np.linalg.norm(pi @ wi - wi) / np.linalg.norm(wi)))
    return PolarizationFrame(s, pts, w, np.array([canonical_direction(v) for v in w]),
                             np.array(kres), np.array(pres), np.linalg.norm(w, axis=1))


def _transport(ray: Ray, w0, generator) -> PolarizationFrame:
    w0 = _check_kernel(ray, w0)
    sheet = ray.sheet
    B = ray.background

    def rhs(s, y):
        pt = PhasePoint.from_array(y[:8])
        bg = _bg_at(B, pt.t, pt.x)
        w = y[8:11] + 1j * y[11:14]
        dw = generator(pt, bg) @ w
        return np.concatenate([hamilton_field(sheet, pt, bg), dw.real, dw.imag])

    y0 = np.concatenate([ray.points[0], w0.real, w0.imag])
    span = float(ray.s[-1])
    s, Y, _, stop = _integrate(rhs, y0, span, ray.tol, len(ray.s), _ray_events(sheet, B), B, sheet)
    if s is None or stop:
        raise RayStopped(stop.get("reason", "transport integration failed"), stop.get("s", 0.0), ray)
    return _frame(ray, s, Y)


def dencker_transport(ray: Ray, B=None, w0=None) -> PolarizationFrame:
    """Parallel transport of ``w0`` for the connection on ``ker p2`` along ``ray``.

    Integrates ``dw/ds = -1/2 {pt2, p2} w - i pt2 ps w`` jointly with the ray
    at the ray's tolerance; brackets by central differences.

    ``w0=None`` starts from :func:`initial_polarization` at the ray start.

    Raises
    ------
    NotInKernel
        If ``w0`` is not in ``ker p2`` at the start (residual above 1e-8).
    """
    if B is not None and ray.background is None:
        ray = Ray(ray.sheet, ray.s, ray.points, ray.qDrift, ray.stepStats, B, ray.tol)
    sheet = ray.sheet
    Bk = ray.background
    pt_fn = ptilde_fn(sheet)

    def generator(pt, bg):
        br = poisson_bracket_matrix(pt_fn, p2_fn, pt, Bk)
        ps = build_subprincipal(pt, bg).entries
        return -0.5 * br - 1j * pt_fn(pt, bg) @ ps

    return _transport(ray, w0, generator)


def simplified_transport(ray: Ray, B=None, a0=None) -> PolarizationFrame:
    """Transport ``da/ds = (H_q pi)(gamma(s)) a`` with the sheet projector ``pi``.

    Only the polarization direction is meaningful; the half-density factor
    of the Lie derivative is not included. ``a0=None`` starts from
    :func:`initial_polarization` at the ray start.
    """
    if B is not None and ray.background is None:
        ray = Ray(ray.sheet, ray.s, ray.points, ray.qDrift, ray.stepStats, B, ray.tol)
    sheet = ray.sheet
    Bk = ray.background
    pi_fn = projector_fn(sheet)

    def generator(pt, bg):
        return hamilton_derivative(pi_fn, sheet, pt, Bk)

    return _transport(ray, a0, generator)


def initial_polarization(pt: PhasePoint, bg: BackgroundEval) -> np.ndarray:
    """First vector of an orthonormal basis of ``ker p2`` at ``pt``."""
    from .spectra import kernel_basis

    K = kernel_basis(p2_fn(pt, bg), 1e-8)
    if not K:
        raise NotInKernel("p2 has a trivial kernel at the start point")
    return np.asarray(K[0], dtype=complex)
