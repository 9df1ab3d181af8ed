"""Acceptance gate: one test and one printed PASS/FAIL line per criterion."""

import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from mhdpol import symbols, verify
from mhdpol.background import BackgroundEval, BackgroundField, eval_background
from mhdpol.errors import RayStopped
from mhdpol.classify import check_kernel_mapping, kernel_mapping_control, vanishing_order
from mhdpol.geometry import (
    dencker_transport, direction_distance, hamilton_field, hamilton_field_fd, initial_polarization,
    simplified_transport, trace_ray,
)
from mhdpol.spectra import kernel_basis, sheet_tau
from mhdpol.symbols import PhasePoint, build_q


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def run(name, n, seed):
    _, fn, tol = next(c for c in verify.CHECKS if c[0] == name)
    got, worst = fn(np.random.default_rng(seed), n)
    return got, worst, tol


def test_criterion_01_det_factorization(report):
    t0 = time.perf_counter()
    got, worst, tol = run("det_factorization", 10_000, 101)
    dt = time.perf_counter() - t0
    ok = got >= 10_000 and worst <= 1e-9 and dt <= 10.0
    report(1, ok, f"samples={got} max_rel={worst:.2e} (<= 1e-9) runtime={dt:.1f}s (<= 10s)")


def test_criterion_02_eigenvalues_and_cases(report):
    got, worst, _ = run("eigenvalues", 10_000, 102)
    cases, bad, _ = run("multiplicity_cases", 300, 103)
    ok = got >= 10_000 and worst <= 1e-8 and cases >= 1200 and bad == 0
    report(2, ok, f"samples={got} max_dev={worst:.2e} (<= 1e-8 (1+max|lam|)); "
                  f"case points={cases} mismatches={int(bad)}")


def test_criterion_03_symmetrizer(report):
    got, worst, _ = run("symmetrizer", 10_000, 104)
    ok = got >= 10_000 and worst <= 1e-12
    report(3, ok, f"samples={got} max ||SA-(SA)^T||/||SA|| = {worst:.2e} (<= 1e-12), S positive definite")


def test_criterion_04_projectors(report):
    got, worst, _ = run("projector_algebra", 1000, 105)
    ok = got >= 1000 and worst <= 1e-9
    report(4, ok, f"samples={got} max residual={worst:.2e} (<= 1e-9)")


def test_criterion_05_parametrix(report):
    parts = [run(f"parametrix_sheet{j}", 1000, 105 + j) for j in (1, 2, 3)]
    ok = all(g >= 1000 and w <= 1e-8 for g, w, _ in parts)
    report(5, ok, "max residual per sheet " + ", ".join(f"{w:.2e}" for _, w, _ in parts) + " (<= 1e-8)")


def test_criterion_06_transport_lemmas(report):
    g1, w1, _ = run("ptilde_ps_pi", 1000, 110)
    g2, w2, _ = run("bracket_lemma", 1000, 111)
    ok = g1 >= 1000 and g2 >= 1000 and w1 <= 1e-6 and w2 <= 1e-5
    report(6, ok, f"ptilde ps pi={w1:.2e} (<= 1e-6); bracket lemma={w2:.2e} (<= 1e-5); "
                  f"non-constant backgrounds, {g1}+{g2} samples")


def test_criterion_07_kernel_structure(report):
    rng = np.random.default_rng(112)
    dims, orders, maps, controls = [], [], [], []
    for kind, dim, order in (("MHDTypeSigma2", 6, 6), ("UniaxialSigma2", 2, 2)):
        for _ in range(100):
            bg, p = verify._sigma2_sample(rng, kind)
            dims.append(len(kernel_basis(build_q(p, bg).entries)) == dim)
            orders.append(vanishing_order(p, bg) == order)
            maps.append(check_kernel_mapping(p, bg, kind))
            controls.append(kernel_mapping_control(p, bg, kind))
    simple = []
    while len(simple) < 100:
        bg = verify.random_background(rng)
        if verify.hc_separated(bg):
            simple.append(vanishing_order(verify.simple_sheet_point(rng, bg), bg) == 1)
    ok = all(dims) and all(orders) and all(simple) and max(maps) <= 1e-8 and min(controls) >= 1e-3
    report(7, ok, f"kernel dims ok={sum(dims)}/200 orders ok={sum(orders)}/200 simple ok={sum(simple)}/100 "
                  f"max mapping={max(maps):.2e} (<= 1e-8) min control={min(controls):.2e} (>= 1e-3)")


TANH = BackgroundField.from_values("1 + 0.1*tanh(x2)", 1.0, (1.0, 0.5, 0.2), 5 / 3)
TANH_XI = np.array([0.3, 1.0, 0.4])


def _start(B, sheet, xi, x=np.zeros(3)):
    bg = eval_background(B, 0.0, x) if isinstance(B, BackgroundField) else B
    return PhasePoint(0.0, x, sheet_tau(bg, xi, sheet), xi)


def test_criterion_08_rays(report):
    rng = np.random.default_rng(113)
    drift, affine, fd = 0.0, 0.0, 0.0
    for _ in range(5):
        B = verify.random_field(rng)
        bg = eval_background(B, 0.0, np.zeros(3))
        xi = verify.random_xi(rng)
        if not verify.separated(bg, xi, 1e-2):
            continue
        for sheet in (1, 2, 3):
            try:
                drift = max(drift, trace_ray(_start(B, sheet, xi), sheet, B, span=0.5).qDrift)
            except RayStopped as exc:  # a stopped ray still reports its drift
                if exc.ray is None:
                    raise
                drift = max(drift, exc.ray.qDrift)
    for sheet in (1, 2, 3):
        drift = max(drift, trace_ray(_start(TANH, sheet, TANH_XI), sheet, TANH).qDrift)
        bg = BackgroundEval.constant(1.3, 0.8, (0.4, -1.0, 0.6), 5 / 3)
        ray = trace_ray(_start(bg, sheet, TANH_XI), sheet, bg, span=3.0)
        A = np.column_stack([np.ones_like(ray.s), ray.s])
        coef, *_ = np.linalg.lstsq(A, ray.points, rcond=None)
        affine = max(affine, float(np.max(np.abs(A @ coef - ray.points))))
    n = 0
    while n < 1000:
        B = verify.random_field(rng)
        x = rng.uniform(-1, 1, 3)
        bg = eval_background(B, 0.0, x)
        xi = verify.random_xi(rng)
        if not verify.separated(bg, xi, 1e-2):
            continue
        n += 1
        for sheet in (1, 2, 3):
            p = PhasePoint(0.0, x, rng.normal() * 3, xi)
            a = hamilton_field(sheet, p, bg)
            fd = max(fd, float(np.linalg.norm(a - hamilton_field_fd(sheet, p, B)) / np.linalg.norm(a)))
    ok = drift <= 1e-6 and affine <= 1e-9 and fd <= 1e-6
    report(8, ok, f"max qDrift={drift:.2e} (<= 1e-6) affine dev={affine:.2e} (<= 1e-9) "
                  f"AD vs FD={fd:.2e} (<= 1e-6, {n} points x 3 sheets)")


def test_criterion_09_polarization_transport(report):
    kres, dirs = 0.0, 0.0
    for sheet in (1, 2, 3):
        ray = trace_ray(_start(TANH, sheet, TANH_XI), sheet, TANH)
        w0 = initial_polarization(PhasePoint.from_array(ray.points[0]), eval_background(TANH, 0.0, np.zeros(3)))
        d = dencker_transport(ray, w0=w0)
        a = simplified_transport(ray, a0=w0)
        kres = max(kres, d.maxKernelResidual, float(np.max(a.kernelResidual)))
        dirs = max(dirs, max(direction_distance(u, v) for u, v in zip(d.direction, a.direction)))
    ok = kres <= 1e-6 and dirs <= 1e-5
    report(9, ok, f"max kernel residual={kres:.2e} (<= 1e-6) max direction gap={dirs:.2e} (<= 1e-5)")


def test_criterion_10_mutation(report, monkeypatch):
    monkeypatch.setattr(symbols, "_P2_CROSS_SIGN", -1.0)
    rep = verify.run_identity_suite(200, seed=42)
    failed = [r.name for r in rep.failed]
    report(10, len(failed) >= 3, f"{len(failed)} checks fail under the sign flip (>= 3): {', '.join(failed)}")


def test_criterion_11_cli_determinism(report, tmp_path):
    exe = shutil.which("mhdpol")
    cmd = ([exe] if exe else [sys.executable, "-m", "mhdpol.cli"]) + ["verify", "--seed", "42", "--samples", "1000"]
    outs, codes, times = [], [], []
    for _ in range(2):
        t0 = time.perf_counter()
        proc = subprocess.run(cmd, capture_output=True, cwd=tmp_path)
        times.append(time.perf_counter() - t0)
        outs.append(proc.stdout)
        codes.append(proc.returncode)
    ok = codes == [0, 0] and outs[0] == outs[1] and max(times) <= 60.0
    report(11, ok, f"exit codes={codes} identical={outs[0] == outs[1]} runtime={max(times):.1f}s (<= 60s)")
