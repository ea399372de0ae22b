import math

import numpy as np
import pytest
import sympy as sp

from zetasum.decomp import OperatorFamily
from zetasum.surfrev import ProfileError, SurfaceProfile, decompose

XS = np.linspace(0.0, 1.0, 11)


def test_unit_cylinder():
    fam = decompose("1")
    assert isinstance(fam, OperatorFamily)
    assert fam.V == 1.0 and fam.W == 0.0


def test_radius_two():
    fam = decompose("2")
    assert fam.V == 0.25 and fam.W == 0.0
    assert fam.multiplicity(0) == 1 and fam.multiplicity(5) == 2


def test_exponential_profile():
    p = SurfaceProfile.from_text("exp(x)")
    assert p.V(XS) == pytest.approx(np.exp(-2 * XS), rel=1e-14)
    assert p.W(XS) == pytest.approx(np.full_like(XS, 0.25), abs=1e-14)


@pytest.mark.parametrize("text", ["1 + x^2/3", "2 + sin(3*x)", "cosh(x)", "sqrt(1+x)"])
def test_potentials_against_sympy(text):
    x = sp.Symbol("x")
    r = sp.sympify(text.replace("^", "**"))
    W = sp.diff(r, x, 2) / (2 * r) - (sp.diff(r, x) / (2 * r)) ** 2
    p = SurfaceProfile.from_text(text)
    for xv in (0.0, 0.37, 1.0):
        assert p.W(xv) == pytest.approx(float(W.subs(x, xv)), rel=1e-12, abs=1e-14)
        assert p.V(xv) == pytest.approx(float((1 / r**2).subs(x, xv)), rel=1e-14)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_scaling(c):
    p = SurfaceProfile.from_text("1 + x^2")
    q = SurfaceProfile.from_text(f"{c} * (1 + x^2)")
    assert np.max(np.abs(q.V(XS) - p.V(XS) / c**2)) <= 1e-12
    assert np.max(np.abs(q.W(XS) - p.W(XS))) <= 1e-12


def test_constant_profile_has_no_w():
    p = SurfaceProfile.from_text("1.7")
    assert np.all(p.W(XS) == 0.0)


@pytest.mark.parametrize("text", ["x", "x - 0.5", "sin(6*x)"])
def test_nonpositive_profile_rejected(text):
    with pytest.raises(ProfileError):
        SurfaceProfile.from_text(text)


def test_boundary_conditions_pass_through():
    fam = decompose("exp(x)", "n", "0.3")
    assert fam.bc0.theta == pytest.approx(math.pi / 2)
    assert fam.bc1.theta == 0.3


def test_surface_neumann_becomes_robin():
    fam = decompose("exp(x)", "n", "n", surface_neumann=True)
    # f' - (r'/2r) f = 0 with r'/r = 1, i.e. cot(theta) = -1/2
    for bc in (fam.bc0, fam.bc1):
        assert 1 / math.tan(bc.theta) == pytest.approx(-0.5, rel=1e-14)
    assert decompose("2", "n", "n", surface_neumann=True).bc0.name == "neumann"
