import math

import numpy as np
import pytest

from mhdpol.background import BackgroundEval, BackgroundField, eval_background
from mhdpol.errors import DegenerateMode, NotInKernel, NotOnSheet, RadicalDegenerate, RayStopped
from mhdpol.geometry import (
    dencker_transport, direction_distance, hamilton_field, hamilton_field_fd, initial_polarization,
    poisson_bracket_matrix, sheet_q, simplified_transport, trace_ray,
)
from mhdpol.spectra import sheet_tau
from mhdpol.symbols import PhasePoint
from mhdpol.verify import random_field, separated

TANH = BackgroundField.from_values("1 + 0.1*tanh(x2)", 1.0, (1.0, 0.5, 0.2), 5 / 3)
TANH_XI = np.array([0.3, 1.0, 0.4])


def on_sheet(B, sheet, xi, x=(0, 0, 0)):
    bg = eval_background(B, 0.0, np.asarray(x, float)) if isinstance(B, BackgroundField) else B
    return PhasePoint(0.0, x, sheet_tau(bg, xi, sheet), xi)


def line_deviation(s, X):
    A = np.column_stack([np.ones_like(s), s])
    coef, *_ = np.linalg.lstsq(A, X, rcond=None)
    return float(np.max(np.abs(A @ coef - X)))


def test_alfven_field_example():
    bg = BackgroundEval.constant(1, 1, (1, 0, 0), 1.4)
    v = hamilton_field(1, PhasePoint(0, (0, 0, 0), 1.0, (1, 0, 0)), bg)
    np.testing.assert_allclose(v, [2, -2, 0, 0, 0, 0, 0, 0])


def test_hamilton_field_against_differences():
    rng = np.random.default_rng(0)
    worst = 0.0
    n = 0
    while n < 150:
        B = random_field(rng)
        x = rng.uniform(-1, 1, 3)
        bg = eval_background(B, 0.0, x)
        xi = rng.normal(size=3)
        if not separated(bg, xi, 1e-2):
            continue
        n += 1
        for sheet in (1, 2, 3):
            p = PhasePoint(0.0, x, rng.normal(), xi)
            a = hamilton_field(sheet, p, bg)
            f = hamilton_field_fd(sheet, p, B)
            worst = max(worst, np.linalg.norm(a - f) / np.linalg.norm(a))
    assert worst <= 1e-6


def test_radical_degenerate():
    bg = BackgroundEval.constant(1, 1, (1, 0, 0), 1.0)
    with pytest.raises(RadicalDegenerate):
        hamilton_field(3, PhasePoint(0, (0, 0, 0), 1.0, (1, 0, 0)), bg)


def test_constant_alfven_ray_is_straight():
    bg = BackgroundEval.constant(1, 1, (1, 0.2, 0), 1.4)
    xi = np.array([1.0, 0.3, 0.1])
    hx = bg.H @ xi
    ray = trace_ray(PhasePoint(0, (0, 0, 0), hx, xi), 1, bg, span=2.0)
    np.testing.assert_allclose(ray.points[:, 1:4], np.outer(ray.s, -2 * hx * bg.H), atol=1e-12)
    np.testing.assert_allclose(ray.points[:, 4:], np.tile(np.r_[hx, xi], (len(ray), 1)), atol=1e-15)
    assert len(ray) >= 64


@pytest.mark.parametrize("sheet", [1, 2, 3])
def test_constant_rays_affine(sheet):
    bg = BackgroundEval.constant(1.3, 0.8, (0.4, -1.0, 0.6), 5 / 3)
    ray = trace_ray(on_sheet(bg, sheet, TANH_XI), sheet, bg, span=3.0)
    assert line_deviation(ray.s, ray.points[:, :4]) <= 1e-9
    assert ray.qDrift <= 1e-6


@pytest.mark.parametrize("sheet", [1, 2, 3])
def test_varying_background_ray_drift(sheet):
    ray = trace_ray(on_sheet(TANH, sheet, TANH_XI), sheet, TANH)
    assert ray.qDrift <= 1e-6


def test_drift_shrinks_with_tolerance():
    start = on_sheet(TANH, 3, TANH_XI)
    loose = trace_ray(start, 3, TANH, span=3.0, tol=1e-6)
    tight = trace_ray(start, 3, TANH, span=3.0, tol=1e-9)
    assert tight.qDrift <= loose.qDrift


def test_homogeneity_same_base_path():
    start = on_sheet(TANH, 1, TANH_XI)
    r1 = trace_ray(start, 1, TANH, span=1.0, nSamples=400)
    r2 = trace_ray(start.replace(tau=2 * start.tau, xi=2 * start.xi), 1, TANH, span=0.5, nSamples=400)
    # d_xi q has degree one, so doubling the frequency halves the parameter
    np.testing.assert_allclose(r2.points[:, 1:4], r1.points[:, 1:4], atol=1e-6)


def test_not_on_sheet_and_projection():
    start = on_sheet(TANH, 2, TANH_XI).replace(tau=5.0)
    with pytest.raises(NotOnSheet):
        trace_ray(start, 2, TANH)
    ray = trace_ray(start, 2, TANH, project=True, span=0.2)
    bg = eval_background(TANH, 0.0, np.zeros(3))
    assert abs(sheet_q(2, PhasePoint.from_array(ray.points[0]), bg)) < 1e-10


def test_degenerate_start():
    bg = BackgroundEval.constant(1, 1, (1, 0, 0), 1.4)
    with pytest.raises(DegenerateMode):
        trace_ray(PhasePoint(0, (0, 0, 0), 0.0, (0, 1, 0)), 1, bg)


def test_ray_stops_where_xi_dot_h_vanishes():
    B = BackgroundField.from_values(1.0, 1.0, ("cos(x1)", "sin(x1)", 0.0), 5 / 3)
    start = on_sheet(B, 3, np.array([0.05, 1.0, 0.0]))
    with pytest.raises(RayStopped) as info:
        trace_ray(start, 3, B, span=20.0)
    exc = info.value
    assert "xi.H" in exc.reason
    assert exc.ray is not None and 0 < exc.s_reached < 20.0
    end = PhasePoint.from_array(exc.ray.points[-1])
    assert abs(eval_background(B, 0.0, end.x).H @ end.xi) < 1e-6


def test_bracket_antisymmetry_and_scalar_case():
    p = on_sheet(TANH, 3, TANH_XI, x=(0.1, 0.3, -0.2))

    def F(q, bg):
        return np.atleast_2d(q.tau)

    def G(q, bg):
        return np.atleast_2d(bg.rho)

    def Ft(q, bg):
        return np.atleast_2d(q.t * q.xi[1] + q.x[1] * q.tau)

    assert poisson_bracket_matrix(F, F, p, TANH)[0, 0] == 0.0
    # {tau, f(x)} = d_t f = 0 for a stationary field
    assert abs(poisson_bracket_matrix(F, G, p, TANH)[0, 0]) < 1e-9
    # {tau, t xi2 + x2 tau} = d_t (t xi2) = xi2
    assert poisson_bracket_matrix(F, Ft, p, TANH)[0, 0] == pytest.approx(p.xi[1], rel=1e-8)
    ab = poisson_bracket_matrix(Ft, G, p, TANH)
    ba = poisson_bracket_matrix(G, Ft, p, TANH)
    np.testing.assert_allclose(ab, -ba, atol=1e-9)


def test_constant_background_transport_is_constant():
    bg = BackgroundEval.constant(1.3, 0.8, (0.4, -1.0, 0.6), 5 / 3)
    for sheet in (1, 2, 3):
        ray = trace_ray(on_sheet(bg, sheet, TANH_XI), sheet, bg, span=2.0)
        w0 = initial_polarization(PhasePoint.from_array(ray.points[0]), bg)
        for frame in (dencker_transport(ray, w0=w0), simplified_transport(ray, a0=w0)):
            np.testing.assert_allclose(frame.w, np.tile(w0, (len(frame.s), 1)), atol=1e-9)


@pytest.mark.parametrize("sheet", [1, 2, 3])
def test_tanh_transport(sheet):
    ray = trace_ray(on_sheet(TANH, sheet, TANH_XI), sheet, TANH)
    bg0 = eval_background(TANH, 0.0, np.zeros(3))
    w0 = initial_polarization(PhasePoint.from_array(ray.points[0]), bg0)
    d = dencker_transport(ray, w0=w0)
    a = simplified_transport(ray, a0=w0)
    assert d.maxKernelResidual <= 1e-6
    assert np.max(a.projectorResidual) <= 1e-6
    assert max(direction_distance(u, v) for u, v in zip(d.direction, a.direction)) <= 1e-5


def test_transport_requires_kernel_vector():
    ray = trace_ray(on_sheet(TANH, 3, TANH_XI), 3, TANH, span=0.2)
    with pytest.raises(NotInKernel):
        dencker_transport(ray, w0=np.array([1.0, 0.0, 0.0]))


def test_transport_default_start_is_first_kernel_vector():
    ray = trace_ray(on_sheet(TANH, 2, TANH_XI), 2, TANH, span=0.3)
    w0 = initial_polarization(PhasePoint.from_array(ray.points[0]), eval_background(TANH, 0.0, np.zeros(3)))
    for fn in (dencker_transport, simplified_transport):
        np.testing.assert_allclose(fn(ray).w, fn(ray, None, w0).w, atol=0)


def test_direction_distance_phase_invariant():
    u = np.array([1.0, 2.0j, -0.5])
    assert direction_distance(u, np.exp(0.7j) * 3 * u) < 1e-15
    assert direction_distance([1, 0, 0], [0, 1, 0]) == pytest.approx(1.0)
    assert direction_distance([1, 0, 0], [1, 1, 0]) == pytest.approx(math.sqrt(0.5))
