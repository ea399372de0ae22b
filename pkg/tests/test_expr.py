import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from zetasum.expr import (
    DomainError,
    ExpressionError,
    derive_expression,
    eval_expression,
    parse_expression,
)


def test_parse_structure():
    ast = parse_expression("exp(-2*x)")
    assert ast.op == "exp"
    inner = ast.args[0]
    assert inner.op == "*" and inner.args[1].op == "x"
    assert inner.args[0].op == "neg" and inner.args[0].args[0].value == 2.0


@pytest.mark.parametrize("text,x,expected", [
    ("2+3*x^2", 2.0, 14.0),
    ("-x^2", 3.0, -9.0),
    ("2^3^2", 0.0, 512.0),
    ("2^-1", 0.0, 0.5),
    ("(1+x)/(1-x)", 0.5, 3.0),
    ("pi", 0.0, math.pi),
    ("e^x", 1.0, math.e),
    ("1 - -x", 2.0, 3.0),
    ("1.5e2 * x", 2.0, 300.0),
])
def test_evaluation(text, x, expected):
    assert eval_expression(parse_expression(text), x) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("fn", ["sin", "cos", "exp", "log", "sinh", "cosh", "tanh", "sqrt"])
def test_functions_match_mpmath(fn):
    ast = parse_expression(f"{fn}(x)")
    for x in (0.3, 1.0, 2.5):
        assert ast(x) == pytest.approx(float(getattr(mpmath, fn)(x)), rel=1e-14)


def test_examples():
    assert parse_expression("exp(0)")(0.0) == 1.0
    assert parse_expression("sinh(1)")(0.0) == pytest.approx(1.1752012, abs=1e-7)
    assert derive_expression(parse_expression("x^2"))(3.0) == pytest.approx(6.0)


def test_vectorized():
    xs = np.linspace(0, 1, 5)
    assert parse_expression("x^2")(xs) == pytest.approx(xs**2)
    assert parse_expression("3")(xs) == pytest.approx(np.full(5, 3.0))


@pytest.mark.parametrize("text,offset", [
    ("sin(x", 5),
    ("", 0),
    ("2*", 2),
    ("x $ 2", 2),
    ("(x))", 3),
    ("foo(x)", 0),
    ("x y", 2),
])
def test_syntax_errors(text, offset):
    with pytest.raises(ExpressionError) as exc:
        parse_expression(text)
    assert exc.value.offset == offset


@pytest.mark.parametrize("text,x", [
    ("log(x)", 0.0), ("log(x)", -1.0), ("sqrt(x)", -1.0), ("1/x", 0.0), ("x^0.5", -2.0),
])
def test_domain_errors(text, x):
    with pytest.raises(DomainError):
        parse_expression(text)(x)


def test_negative_base_integer_power():
    assert parse_expression("x^3")(-2.0) == -8.0


X = sp.Symbol("x")
CASES = ["x^2*sin(x)", "exp(-2*x)", "log(1+x^2)/x", "sqrt(1+x)*cosh(x)", "tanh(x)^3",
         "x^x", "sinh(2*x)/(1+x)", "-x^2 + cos(x)^2", "e^(x/2)"]


@pytest.mark.parametrize("text", CASES)
def test_derivative_against_sympy(text):
    ref = sp.diff(sp.sympify(text.replace("^", "**"), locals={"e": sp.E}), X)
    d1 = derive_expression(parse_expression(text))
    d2 = derive_expression(d1)
    ref2 = sp.diff(ref, X)
    for x in (0.4, 1.3, 2.2):
        assert d1(x) == pytest.approx(float(ref.subs(X, x)), rel=1e-12)
        assert d2(x) == pytest.approx(float(ref2.subs(X, x)), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 3))
def test_linearity_of_derivative(a, x):
    f = parse_expression(f"({a})*sin(x) + x^3")
    g = derive_expression(f)
    assert g(x) == pytest.approx(a * math.cos(x) + 3 * x * x, rel=1e-12, abs=1e-12)
