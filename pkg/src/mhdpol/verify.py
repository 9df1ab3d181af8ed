"""Brute-force oracles and the randomized identity suite.

Every closed form elsewhere in the package is compared here against an
independent dense computation or an independent route to the same quantity.
Checks draw from their own child of one ``SeedSequence``, so the report is a
pure function of ``(nSamples, seed)`` and does not depend on thread count.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .background import BackgroundEval, BackgroundField, eval_background
from .classify import check_kernel_mapping, vanishing_order
from .errors import MhdpolError
from .geometry import hamilton_derivative, p2_fn, poisson_bracket_matrix, projector_fn, ptilde_fn
from .spectra import eigenvalues_A, kernel_basis, projector_arrays, sheet_tau, wave_speeds
from .symbols import (
    A_array,
    PhasePoint,
    build_q,
    det_q,
    p2_array,
    ptilde_array,
    q_factors,
    q_scale,
    subprincipal_definitional,
    symmetrizer_array,
    two_i_ps_array,
)

SEP_MARGIN = 1e-3
FD_MARGIN = 1e-2


# ---------------------------------------------------------------------------
# oracles


def numeric_det(M) -> complex:
    """Determinant by LU with partial pivoting."""
    M = np.asarray(M)
    lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    sign = -1.0 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1.0
    d = sign * np.prod(np.diag(lu))
    return complex(d) if np.iscomplexobj(d) else float(d)


def numeric_adjugate(M) -> np.ndarray:
    """Transpose of the cofactor matrix; well defined for singular ``M``."""
    M = np.asarray(M)
    n = M.shape[0]
    if n == 1:
        return np.ones_like(M)
    idx = np.arange(n)
    minors = np.empty((n, n, n - 1, n - 1), dtype=M.dtype)
    for i in range(n):
        rows = idx[idx != i]
        for j in range(n):
            minors[i, j] = M[np.ix_(rows, idx[idx != j])]
    cof = np.linalg.det(minors)
    sign = (-1.0) ** np.add.outer(idx, idx)
    return (sign * cof).T


def numeric_eig_sym(M) -> np.ndarray:
    """Eigenvalues of a real symmetric or Hermitian matrix, ascending."""
    return np.linalg.eigvalsh(np.asarray(M))


def numeric_kernel(M, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal kernel basis (columns) by SVD with relative cut ``tol``."""
    return scipy.linalg.null_space(np.asarray(M), rcond=tol)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class CheckResult:
    check: int
    name: str
    samples: int
    max_residual: float
    tolerance: float
    required: int

    @property
    def passed(self) -> bool:
        return self.samples >= self.required and math.isfinite(self.max_residual) \
            and self.max_residual <= self.tolerance


@dataclass(frozen=True)
class VerifyReport:
    seed: int
    nSamples: int
    results: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> list:
        return [r for r in self.results if not r.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"identity suite: seed={self.seed} samples={self.nSamples}"]
        width = max(len(r.name) for r in self.results)
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{r.check:2d} {r.name:<{width}} {status} samples={r.samples} "
                         f"max_residual={r.max_residual:.3e} tolerance={r.tolerance:.1e}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} "
                     f"({len(self.results) - len(self.failed)}/{len(self.results)} checks)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "name", "samples", "max_residual", "tolerance", "pass"])
        for r in self.results:
            w.writerow([r.check, r.name, r.samples, f"{r.max_residual:.17g}", f"{r.tolerance:.17g}",
                        "true" if r.passed else "false"])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# samplers


def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_background(rng) -> BackgroundEval:
    """Constant background: log-uniform rho and p on [0.1, 10], gamma on [1.1, 2], H on [-3, 3]^3."""
    rho = _log_uniform(rng, 0.1, 10.0)
    p = _log_uniform(rng, 0.1, 10.0)
    gamma = float(rng.uniform(1.1, 2.0))
    H = rng.uniform(-3.0, 3.0, 3)
    return BackgroundEval.constant(rho, p, H, gamma)


def random_xi(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v) * _log_uniform(rng, 0.1, 10.0)


def _num(v: float) -> str:
    return f"({v:.17g})"


def random_field(rng) -> BackgroundField:
    """Smooth non-constant background with bounded relative variation.

    Amplitudes stay below 30 percent, so rho and p remain positive
    everywhere.  Force balance is not imposed.
    """
    def wave(fn):
        k = rng.normal(size=3)
        phase = rng.uniform(-1.0, 1.0)
        return f"{fn}({_num(k[0])}*x1 + {_num(k[1])}*x2 + {_num(k[2])}*x3 + {_num(phase)})"

    rho0 = _log_uniform(rng, 0.1, 10.0)
    p0 = _log_uniform(rng, 0.1, 10.0)
    rho = f"{_num(rho0)}*(1 + {_num(rng.uniform(-0.3, 0.3))}*{wave('tanh')})"
    p = f"{_num(p0)}*(1 + {_num(rng.uniform(-0.3, 0.3))}*{wave('sin')})"
    H = tuple(f"{_num(rng.uniform(-3, 3))} + {_num(rng.uniform(-0.5, 0.5))}*{wave('cos')}" for _ in range(3))
    return BackgroundField.from_values(rho, p, H, float(rng.uniform(1.1, 2.0)))


def separated(bg: BackgroundEval, xi, margin: float = SEP_MARGIN) -> bool:
    """The three wave families are well separated at ``xi``."""
    nx = float(np.linalg.norm(xi))
    nH = float(np.linalg.norm(bg.H))
    if nx * nH == 0.0:
        return False
    H2 = nH * nH
    return (abs(float(bg.H @ xi)) > margin * nx * nH
            and float(np.linalg.norm(np.cross(xi, bg.H))) > margin * nx * nH
            and abs(H2 - bg.gp) > margin * (H2 + bg.gp))


def mhd_sigma2_point(rng, bg: BackgroundEval) -> PhasePoint:
    v = rng.normal(size=3)
    v -= (v @ bg.H) / (bg.H @ bg.H) * bg.H
    xi = v / np.linalg.norm(v) * _log_uniform(rng, 0.1, 10.0)
    return PhasePoint(0.0, np.zeros(3), 0.0, xi)


def uniaxial_sigma2_point(rng, bg: BackgroundEval) -> PhasePoint:
    nH = float(np.linalg.norm(bg.H))
    k = _log_uniform(rng, 0.1, 10.0)
    xi = bg.H / nH * k * rng.choice([-1.0, 1.0])
    tau = rng.choice([-1.0, 1.0]) * k * nH / math.sqrt(bg.rho)
    return PhasePoint(0.0, np.zeros(3), tau, xi)


def simple_sheet_point(rng, bg: BackgroundEval, sheet: int = 6) -> PhasePoint:
    """A point on exactly one of the seven sheets (default: the fast sheet ``S6``).

    ``bg`` must satisfy ``|H|^2 != rho c^2`` (see :func:`hc_separated`).
    """
    if not hc_separated(bg):
        raise ValueError("background has |H|^2 = rho c^2; no separated frequency exists")
    while True:
        xi = random_xi(rng)
        if separated(bg, xi):
            break
    ws = wave_speeds(bg, xi)
    n = float(np.linalg.norm(xi))
    alf = float(bg.H @ xi) / math.sqrt(bg.rho)
    tau = {1: 0.0, 2: ws.cs * n, 3: -ws.cs * n, 4: alf, 5: -alf, 6: ws.cf * n, 7: -ws.cf * n}[sheet]
    return PhasePoint(0.0, np.zeros(3), tau, xi)


def hc_separated(bg: BackgroundEval, margin: float = SEP_MARGIN) -> bool:
    H2 = float(bg.H @ bg.H)
    return abs(H2 - bg.gp) > margin * (H2 + bg.gp) and H2 > 0.0


# ---------------------------------------------------------------------------
# checks.  Each takes (rng, n) and returns (admissible samples, max residual).


def _collect(n, draw, max_tries=None):
    """Draw until ``n`` admissible samples or ``20 n`` attempts; ``draw`` returns a residual or None."""
    max_tries = max_tries or 20 * n
    worst, got = 0.0, 0
    for _ in range(max_tries):
        if got >= n:
            break
        r = draw()
        if r is None:
            continue
        got += 1
        worst = max(worst, float(r)) if math.isfinite(r) else math.inf
    return got, worst


def _speed_scale(bg, tau, xi):
    ws = wave_speeds(bg, xi)
    return abs(tau) + math.sqrt(ws.cf2) * float(np.linalg.norm(xi))


def _random_tau(rng, bg, xi):
    return float(rng.uniform(-1.5, 1.5)) * _speed_scale(bg, 0.0, xi)


def check_det_factorization(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        tau = _random_tau(rng, bg, xi)
        pt = PhasePoint(0.0, np.zeros(3), tau, xi)
        S = _speed_scale(bg, tau, xi)
        return abs(numeric_det(build_q(pt, bg).entries) - det_q(pt, bg)) / S ** 8
    return _collect(n, draw)


def check_eigenvalues(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        lam = np.linalg.eigvals(A_array(bg.rho, bg.gp, bg.H, xi))
        formula = eigenvalues_A(bg, xi)
        dev = np.max(np.abs(np.sort(lam.real) - formula)) + np.max(np.abs(lam.imag))
        return dev / (1.0 + np.max(np.abs(formula)))
    return _collect(n, draw)


_PATTERNS = {
    "i": (1, 1, 1, 2, 1, 1, 1),
    "ii": (1, 6, 1),
    "iii-sub": (1, 2, 2, 2, 1),
    "iii-super": (2, 1, 2, 1, 2),
}


def _dense_multiplicities(bg, xi):
    # A is similar to a symmetric matrix through S^(1/2), which keeps the
    # dense eigenvalues of multiple roots at rounding accuracy.
    S = symmetrizer_array(bg.rho, bg.gp)
    w, V = np.linalg.eigh(S)
    R = V @ np.diag(np.sqrt(w)) @ V.T
    Ri = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
    M = R @ A_array(bg.rho, bg.gp, bg.H, xi) @ Ri
    lam = numeric_eig_sym(0.5 * (M + M.T))
    tol = 1e-8 * (1.0 + np.max(np.abs(lam)))
    mult = []
    prev = None
    for v in lam:
        if prev is not None and abs(v - prev) <= tol:
            mult[-1] += 1
        else:
            mult.append(1)
        prev = v
    return tuple(mult)


def multiplicity_sample(rng, case: str):
    """Background and xi realizing eigenvalue case ``i``, ``ii``, ``iii-sub`` or ``iii-super``."""
    while True:
        bg = random_background(rng)
        if not hc_separated(bg):
            continue
        H2 = float(bg.H @ bg.H)
        if case == "iii-sub" and not H2 < bg.gp:
            continue
        if case == "iii-super" and not H2 > bg.gp:
            continue
        if case == "i":
            xi = random_xi(rng)
            if not separated(bg, xi):
                continue
        elif case == "ii":
            xi = mhd_sigma2_point(rng, bg).xi
        else:
            xi = uniaxial_sigma2_point(rng, bg).xi
        return bg, xi


def check_multiplicity_cases(rng, n):
    total, bad = 0, 0
    for case in ("i", "ii", "iii-sub", "iii-super"):
        for _ in range(n):
            bg, xi = multiplicity_sample(rng, case)
            expected = _PATTERNS[case]
            total += 1
            bad += _dense_multiplicities(bg, xi) != expected
    return total, float(bad)


def check_symmetrizer(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        S = symmetrizer_array(bg.rho, bg.gp)
        if np.min(numeric_eig_sym(S)) <= 0.0 or np.any(S != S.T):
            return math.inf
        SA = S @ A_array(bg.rho, bg.gp, bg.H, xi)
        return np.max(np.abs(SA - SA.T)) / np.max(np.abs(SA))
    return _collect(n, draw)


def check_projector_algebra(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        if not separated(bg, xi):
            return None
        tau = _random_tau(rng, bg, xi)
        P = projector_arrays(bg, xi)
        eye = np.eye(3)
        res = [np.max(np.abs(sum(P) - eye))]
        for i in range(3):
            res.append(np.max(np.abs(P[i] @ P[i] - P[i])))
            res.append(abs(np.trace(P[i]) - 1.0))
            for j in range(3):
                if i != j:
                    res.append(np.max(np.abs(P[i] @ P[j])))
        q = q_factors(bg, tau, xi)
        p2 = p2_array(bg.rho, bg.gp, bg.H, tau, xi)
        res.append(np.max(np.abs(p2 - sum(qj * Pj for qj, Pj in zip(q, P)))) / q_scale(bg, tau, xi))
        return max(res)
    return _collect(n, draw)


def _gamma_tau(rng, bg, xi, sheet):
    """A tau in the conic neighbourhood of sheet ``sheet`` away from the others."""
    base = sheet_tau(bg, xi, sheet, float(rng.choice([-1.0, 1.0])))
    return base * (1.0 + float(rng.uniform(-0.05, 0.05)))


def check_parametrix(sheet):
    def run(rng, n):
        def draw():
            bg = random_background(rng)
            xi = random_xi(rng)
            if not separated(bg, xi):
                return None
            tau = _gamma_tau(rng, bg, xi, sheet)
            q = q_factors(bg, tau, xi)
            scale = q_scale(bg, tau, xi)
            if any(abs(q[j]) < SEP_MARGIN * scale for j in range(3) if j != sheet - 1):
                return None
            pt2 = ptilde_array(bg, tau, xi, sheet)
            p2 = p2_array(bg.rho, bg.gp, bg.H, tau, xi)
            r = pt2 @ p2 - q[sheet - 1] * np.eye(3)
            return np.linalg.norm(r, 2) / (np.linalg.norm(pt2, 2) * np.linalg.norm(p2, 2))
        return _collect(n, draw)
    return run


def check_p2_spectrum(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        if not separated(bg, xi):
            return None
        tau = _random_tau(rng, bg, xi)
        lam = numeric_eig_sym(p2_array(bg.rho, bg.gp, bg.H, tau, xi))
        q = np.sort(q_factors(bg, tau, xi))
        return np.max(np.abs(lam - q)) / q_scale(bg, tau, xi)
    return _collect(n, draw)


def check_p2_vector_form(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        tau = _random_tau(rng, bg, xi)
        beta = rng.normal(size=3)
        H = bg.H
        ref = (bg.rho * tau * tau * beta - bg.gp * xi * (xi @ beta)
               - np.cross(np.cross(xi, np.cross(xi, np.cross(beta, H))), H))
        got = p2_array(bg.rho, bg.gp, H, tau, xi) @ beta
        return np.linalg.norm(got - ref) / (q_scale(bg, tau, xi) * np.linalg.norm(beta))
    return _collect(n, draw)


def check_wave_speed_invariants(rng, n):
    def draw():
        bg = random_background(rng)
        xi = random_xi(rng)
        ws = wave_speeds(bg, xi)
        a2 = ws.a * ws.a
        s = ws.c2 + ws.h2
        res = [max(0.0, ws.cs2 - a2), max(0.0, a2 - ws.cf2),
               abs(ws.cs2 * ws.cf2 - a2 * ws.c2) / s,
               abs(ws.cs2 + ws.cf2 - s)]
        return max(res) / s
    return _collect(n, draw)


def reduced_matrix(a, b, c2) -> np.ndarray:
    """The 7x7 matrix of the reduced characteristic system in an adapted basis."""
    M = np.zeros((7, 7))
    M[0, 1] = 1.0
    M[1, 4] = b
    M[1, 6] = 1.0
    M[2, 4] = -a
    M[3, 5] = -a
    M[4, 1] = b
    M[4, 2] = -a
    M[5, 3] = -a
    M[6, 1] = c2
    return M


def check_reduced_polynomial(rng, n):
    def draw():
        bg = random_background(rng)
        ws = wave_speeds(bg, random_xi(rng))
        a, b, c2 = ws.a, math.sqrt(ws.b2), ws.c2
        lam = np.linalg.eigvals(reduced_matrix(a, b, c2))
        l2 = lam * lam
        poly = lam * (l2 - a * a) * ((l2 - a * a) * (l2 - c2) - l2 * b * b)
        scale = (abs(a) + b + math.sqrt(c2)) ** 7
        return float(np.max(np.abs(poly))) / scale
    return _collect(n, draw)


def check_adjugate_factorization(bg: BackgroundEval, samples, taus=(1e-3, 1e-4),
                                 parts=("tau_zero", "limit")) -> dict:
    """Divisibility of ``adj q`` by tau.

    ``samples`` is an iterable of frequencies xi.  The small taus are taken
    relative to the smallest non-zero eigenvalue of ``A``, the scale on which
    ``adj q / tau`` varies.  Returns the largest scaled
    entry of ``adj q`` at ``tau = 0`` (``"tau_zero"``) and the largest relative
    change of ``adj q / tau`` between the two small taus (``"limit"``).
    The limit part presumes ``tau = 0`` is a double root of ``det q``
    (``xi.H != 0``); at ``xi.H = 0`` the adjugate vanishes to higher order.
    """
    zero, limit = 0.0, 0.0
    for xi in samples:
        xi = np.asarray(xi, dtype=float)
        q0 = build_q(PhasePoint(0.0, np.zeros(3), 0.0, xi), bg).entries
        entry_scale = max(np.max(np.abs(q0)), _speed_scale(bg, 0.0, xi)) ** 7
        lam = np.abs(eigenvalues_A(bg, xi))
        S = float(np.min(lam[lam > 1e-12 * lam.max()]))
        if "tau_zero" in parts:
            zero = max(zero, float(np.max(np.abs(numeric_adjugate(q0)))) / entry_scale)
        if "limit" not in parts:
            continue
        Ms = [numeric_adjugate(build_q(PhasePoint(0.0, np.zeros(3), t * S, xi), bg).entries) / (t * S)
              for t in taus]
        limit = max(limit, float(np.max(np.abs(Ms[0] - Ms[1]))) / float(np.max(np.abs(Ms[1]))))
    return {"tau_zero": zero, "limit": limit}


def _adjugate_check(key):
    def run(rng, n):
        def draw():
            bg = random_background(rng)
            xi = random_xi(rng)
            if not separated(bg, xi):
                return None
            return check_adjugate_factorization(bg, [xi], parts=(key,))[key]
        return _collect(n, draw)
    return run


def _field_sample(rng, sheet=None, margin=SEP_MARGIN):
    """Non-constant background, a point x and a separated xi; tau on ``sheet`` if given."""
    while True:
        B = random_field(rng)
        x = rng.uniform(-1.0, 1.0, 3)
        try:
            bg = eval_background(B, 0.0, x)
        except MhdpolError:
            continue
        xi = random_xi(rng)
        if not separated(bg, xi, margin):
            continue
        tau = _random_tau(rng, bg, xi) if sheet is None else sheet_tau(bg, xi, sheet, float(rng.choice([-1.0, 1.0])))
        return B, bg, PhasePoint(0.0, x, tau, xi)


def check_subprincipal_skew(rng, n):
    def draw():
        _, bg, pt = _field_sample(rng)
        M = two_i_ps_array(bg, pt.xi)
        norm = np.max(np.abs(M))
        if norm == 0.0:
            return None
        return max(np.max(np.abs(M + M.T)), np.max(np.abs(np.diag(M)))) / norm
    return _collect(n, draw)


def check_subprincipal_dual_route(rng, n):
    def draw():
        _, bg, pt = _field_sample(rng)
        closed = two_i_ps_array(bg, pt.xi) / 2j
        direct = subprincipal_definitional(pt, bg)
        norm = np.max(np.abs(direct))
        if norm == 0.0:
            return None
        return np.max(np.abs(closed - direct)) / norm
    return _collect(n, draw)


def check_ptilde_ps_pi(rng, n):
    def draw():
        sheet = int(rng.integers(1, 4))
        _, bg, pt = _field_sample(rng, sheet)
        ps = two_i_ps_array(bg, pt.xi) / 2j
        pt2 = ptilde_array(bg, pt.tau, pt.xi, sheet)
        pi = projector_arrays(bg, pt.xi)[sheet - 1]
        denom = np.linalg.norm(pt2, 2) * np.linalg.norm(ps, 2)
        if denom == 0.0:
            return None
        return np.linalg.norm(pt2 @ ps @ pi, 2) / denom
    return _collect(n, draw)


def check_bracket_lemma(rng, n):
    def draw():
        sheet = int(rng.integers(1, 4))
        # finite-difference brackets lose accuracy as the sheet gap closes
        B, bg, pt = _field_sample(rng, sheet, FD_MARGIN)
        pi = projector_arrays(bg, pt.xi)[sheet - 1]
        w, V = np.linalg.eigh(pi)
        a = V[:, -1]
        br = poisson_bracket_matrix(ptilde_fn(sheet), p2_fn, pt, B)
        Hpi = hamilton_derivative(projector_fn(sheet), sheet, pt, B)
        lhs = br @ pi @ a
        rhs = -2.0 * Hpi @ a
        denom = np.linalg.norm(br, 2) + 2.0 * np.linalg.norm(Hpi, 2)
        return np.linalg.norm(lhs - rhs) / denom
    return _collect(n, draw)


def _sigma2_sample(rng, kind):
    while True:
        bg = random_background(rng)
        if hc_separated(bg):
            break
    pt = mhd_sigma2_point(rng, bg) if kind == "MHDTypeSigma2" else uniaxial_sigma2_point(rng, bg)
    return bg, pt


def check_kernel_dimensions(rng, n):
    bad, total = 0, 0
    for kind, dim in (("MHDTypeSigma2", 6), ("UniaxialSigma2", 2)):
        for _ in range(n):
            bg, pt = _sigma2_sample(rng, kind)
            total += 1
            bad += len(kernel_basis(build_q(pt, bg).entries)) != dim
    return total, float(bad)


def check_vanishing_order(rng, n):
    bad, total = 0, 0
    for kind, order in (("MHDTypeSigma2", 6), ("UniaxialSigma2", 2), ("simple", 1)):
        for _ in range(n):
            if kind == "simple":
                bg = random_background(rng)
                while not hc_separated(bg):
                    bg = random_background(rng)
                pt = simple_sheet_point(rng, bg)
            else:
                bg, pt = _sigma2_sample(rng, kind)
            total += 1
            bad += vanishing_order(pt, bg) != order
    return total, float(bad)


def check_kernel_mapping_suite(rng, n):
    worst, total = 0.0, 0
    for kind in ("MHDTypeSigma2", "UniaxialSigma2"):
        for _ in range(n):
            bg, pt = _sigma2_sample(rng, kind)
            total += 1
            worst = max(worst, check_kernel_mapping(pt, bg, kind))
    return total, worst


CHECKS = (
    ("det_factorization", check_det_factorization, 1e-9),
    ("eigenvalues", check_eigenvalues, 1e-8),
    ("multiplicity_cases", check_multiplicity_cases, 0.0),
    ("symmetrizer", check_symmetrizer, 1e-12),
    ("projector_algebra", check_projector_algebra, 1e-9),
    ("parametrix_sheet1", check_parametrix(1), 1e-8),
    ("parametrix_sheet2", check_parametrix(2), 1e-8),
    ("parametrix_sheet3", check_parametrix(3), 1e-8),
    ("p2_spectrum", check_p2_spectrum, 1e-9),
    ("p2_vector_form", check_p2_vector_form, 1e-12),
    ("wave_speed_invariants", check_wave_speed_invariants, 1e-12),
    ("reduced_polynomial", check_reduced_polynomial, 1e-8),
    ("adjugate_tau_zero", _adjugate_check("tau_zero"), 1e-10),
    ("adjugate_limit", _adjugate_check("limit"), 1e-2),
    ("subprincipal_skew", check_subprincipal_skew, 1e-12),
    ("subprincipal_dual_route", check_subprincipal_dual_route, 1e-10),
    ("ptilde_ps_pi", check_ptilde_ps_pi, 1e-6),
    ("bracket_lemma", check_bracket_lemma, 1e-5),
    ("kernel_dimensions", check_kernel_dimensions, 0.0),
    ("vanishing_order", check_vanishing_order, 0.0),
    ("kernel_mapping", check_kernel_mapping_suite, 1e-8),
)

def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("MHDPOL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return min(4, os.cpu_count() or 1)


def run_identity_suite(nSamples: int = 1000, seed: int = 0, threads: int | None = None,
                       checks=None) -> VerifyReport:
    """Run every identity check on seeded random samples.

    Parameters
    ----------
    nSamples : int
        Admissible samples per check (per case for the case-split checks).
    seed : int
        Root seed; each check draws from its own spawned child.
    threads : int, optional
        Worker threads; defaults to ``MHDPOL_THREADS`` or ``min(4, cpus)``.
        The report does not depend on it.
    checks : iterable of str, optional
        Restrict to these check names.

    A check with fewer than ``min(100, nSamples)`` admissible samples fails.
    """
    if nSamples < 1:
        raise ValueError("nSamples must be at least 1")
    children = np.random.SeedSequence(seed).spawn(len(CHECKS))
    selected = [(i, spec) for i, spec in enumerate(CHECKS) if checks is None or spec[0] in checks]
    required = min(100, nSamples)

    def run(item):
        i, (name, fn, tol) = item
        rng = np.random.default_rng(children[i])
        got, worst = fn(rng, nSamples)
        return CheckResult(i + 1, name, got, worst, tol, required)

    workers = _thread_count(threads)
    if workers == 1:
        results = [run(item) for item in selected]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, selected))
    return VerifyReport(seed, nSamples, tuple(results))
