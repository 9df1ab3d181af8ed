import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhdpol import dual
from mhdpol.background import BackgroundEval, BackgroundField, equilibrium_residual, eval_background
from mhdpol.errors import DomainError, ExprSyntaxError, NonPhysical, UnknownIdentifier
from mhdpol.expr import evaluate, evaluate_with_gradient, parse_expr


def fd_gradient(expr, t, x, h=1e-6):
    g = np.empty(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        g[k] = (evaluate(expr, t, x + e) - evaluate(expr, t, x - e)) / (2 * h)
    return g


# --- parser ---------------------------------------------------------------


def test_literal():
    assert evaluate(parse_expr("2"), 0.0, np.zeros(3)) == 2.0


def test_polynomial_value_and_gradient():
    e = parse_expr("x1*x1 + 3")
    v, g = evaluate_with_gradient(e, 0.0, np.array([2.0, 0.0, 0.0]))
    assert v == 7.0
    np.testing.assert_allclose(g, [4.0, 0.0, 0.0])
    np.testing.assert_allclose(fd_gradient(e, 0.0, np.array([2.0, 0.0, 0.0]), 1e-5), g, rtol=1e-8)


def test_unbalanced_parenthesis_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("tanh(")
    assert info.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse_expr("y + 1")
    with pytest.raises(UnknownIdentifier):
        parse_expr("log(x1)")


def test_power_is_right_associative():
    assert evaluate(parse_expr("2^3^2"), 0.0, np.zeros(3)) == 2.0 ** 9


def test_unary_minus_binds_tighter_than_power_base():
    assert evaluate(parse_expr("-2^2"), 0.0, np.zeros(3)) == 4.0


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(parse_expr("sqrt(x1 - 1)"), 0.0, np.zeros(3))
    with pytest.raises(DomainError):
        evaluate(parse_expr("1 / x2"), 0.0, np.zeros(3))


# --- dual numbers -----------------------------------------------------------


def test_dual_chain_rule():
    x = dual.Dual.variable(0.3, 0, 1)
    y = dual.sin(x) * dual.exp(x) + dual.tanh(x) ** 2
    d = math.cos(0.3) * math.exp(0.3) + math.sin(0.3) * math.exp(0.3) + 2 * math.tanh(0.3) / math.cosh(0.3) ** 2
    assert dual.value(y) == pytest.approx(math.sin(0.3) * math.exp(0.3) + math.tanh(0.3) ** 2)
    assert dual.gradient(y, 1)[0] == pytest.approx(d, rel=1e-14)


# --- random expressions: AD against central differences ----------------------

_FUNCS = ["sin", "cos", "exp", "tanh", "sqrt", "abs"]


def _expr(depth):
    leaf = st.one_of(
        st.sampled_from(["t", "x1", "x2", "x3"]),
        st.floats(0.1, 3.0).map(lambda v: f"{v:.3f}"),
    )
    if depth == 0:
        return leaf

    sub = _expr(depth - 1)
    # arguments kept in ranges where every function is smooth
    unary = st.tuples(st.sampled_from(_FUNCS), sub).map(
        lambda p: {"sqrt": f"sqrt(1.5 + sin({p[1]}))", "abs": f"abs(2 + cos({p[1]}))",
                   "exp": f"exp(0.3*sin({p[1]}))"}.get(p[0], f"{p[0]}({p[1]})"))
    binary = st.tuples(sub, st.sampled_from(["+", "-", "*"]), sub).map(lambda p: f"({p[0]} {p[1]} {p[2]})")
    quotient = st.tuples(sub, sub).map(lambda p: f"({p[0]}) / (2 + cos({p[1]}))")
    power = sub.map(lambda s: f"(1.2 + sin({s}))^2")
    return st.one_of(leaf, unary, binary, quotient, power)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(src=_expr(3), x=st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3), t=st.floats(-1.0, 1.0))
def test_ad_matches_central_differences(src, x, t):
    e = parse_expr(src)
    x = np.array(x)
    v, g = evaluate_with_gradient(e, t, x)
    assert v == pytest.approx(evaluate(e, t, x), rel=1e-14, abs=1e-14)
    fd = fd_gradient(e, t, x)
    scale = max(1.0, float(np.max(np.abs(g))))
    assert np.max(np.abs(fd - g)) <= 1e-6 * scale


# --- backgrounds ----------------------------------------------------------------


def test_constant_background():
    B = BackgroundField.from_values(1.0, 1.0, (1, 0, 0), 5 / 3)
    bg = eval_background(B, 0.0, np.array([0.3, -2.0, 5.0]))
    assert np.all(bg.grad_rho == 0) and np.all(bg.grad_p == 0) and np.all(bg.jac_H == 0)
    assert bg.c2 == pytest.approx(5 / 3)
    assert bg.h2 == 1.0
    assert np.all(equilibrium_residual(B, np.array([1.0, 2.0, 3.0])) == 0.0)


def test_linear_pressure_gradient():
    B = BackgroundField.from_values(1.0, "1+x2", (1, 0, 0), 5 / 3)
    np.testing.assert_array_equal(eval_background(B, 0.0, np.zeros(3)).grad_p, [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(equilibrium_residual(B, np.zeros(3)), [0.0, 1.0, 0.0])


def test_exponential_density():
    B = BackgroundField.from_values("exp(x1)", 1.0, (0, 0, 0), 1.4)
    bg = eval_background(B, 0.0, np.array([1.0, 0.0, 0.0]))
    assert bg.rho == pytest.approx(math.e)
    assert bg.grad_rho[0] == pytest.approx(math.e)


def test_sheared_equilibrium():
    B = BackgroundField.from_values(1.0, "1 - x2*x2/2", ("x2", 0, 0), 5 / 3)
    for x2 in np.linspace(-1, 1, 9):
        np.testing.assert_allclose(equilibrium_residual(B, np.array([0.2, x2, -0.4])), 0.0, atol=1e-15)


def test_curl_and_divergence_against_differences():
    B = BackgroundField.from_values(1.0, 1.0, ("sin(x2)*x3", "x1*x1 + cos(x3)", "tanh(x1 - x2)"), 5 / 3)
    x = np.array([0.3, -0.2, 0.7])
    bg = eval_background(B, 0.0, x)
    J = np.column_stack([(eval_background(B, 0.0, x + h).H - eval_background(B, 0.0, x - h).H) / 2e-6
                         for h in 1e-6 * np.eye(3)])
    np.testing.assert_allclose(bg.jac_H, J, atol=1e-8)
    curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
    np.testing.assert_allclose(bg.curl_H, curl, atol=1e-8)
    assert bg.div_H == pytest.approx(np.trace(J), abs=1e-8)


def test_non_physical():
    with pytest.raises(NonPhysical):
        BackgroundEval.constant(-1.0, 1.0, (0, 0, 0), 1.4)
    B = BackgroundField.from_values("x1", 1.0, (0, 0, 0), 1.4)
    with pytest.raises(NonPhysical):
        eval_background(B, 0.0, np.array([-1.0, 0, 0]))
    with pytest.raises(NonPhysical):
        BackgroundField.from_values(1.0, 1.0, (0, 0, 0), 0.0)
