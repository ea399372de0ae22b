import json
import math

import mpmath
import numpy as np
import pytest
import sympy as sp

from zetasum.decomp import (
    DecompError,
    OperatorFamily,
    corrections,
    fit_sum_expansion,
    logdet_decomposed,
    logdet_direct,
    mode_expansion_start,
    resolve_sigma,
    sum_trace2,
)
from zetasum.sturm import SLOperator, SturmError, logdet, resolvent_trace


@pytest.fixture(scope="module")
def cyl():
    return OperatorFamily(1.0, 0.0, "d", "d", "cylinder")


@pytest.fixture(scope="module")
def r2():
    return OperatorFamily(0.25, 0.0, "d", "d", "r=2")


@pytest.fixture(scope="module")
def expo():
    return OperatorFamily(lambda x: np.exp(-2 * x), 0.25, "d", "d", "r=e^x")


# ---- oracles ---------------------------------------------------------------


def _lam_sum(a, scale=1):
    """sum over lam in Z of (lam^2 / scale^2 + a)^-2, from the coth series."""
    b2 = mpmath.mpf(a) * scale**2
    g = lambda t: mpmath.pi / mpmath.sqrt(t) * mpmath.coth(mpmath.pi * mpmath.sqrt(t))
    return -(scale**4) * mpmath.diff(g, b2)


def brute_sum(z, scale=1):
    mpmath.mp.dps = 30
    try:
        return float(mpmath.nsum(lambda k: _lam_sum((mpmath.pi * k) ** 2 + z * z, scale),
                                 [1, mpmath.inf]))
    finally:
        mpmath.mp.dps = 15


def cylinder_logdet():
    s = mpmath.nsum(lambda k: mpmath.log(1 - mpmath.exp(-2 * mpmath.pi**2 * k)), [1, mpmath.inf])
    return float(-mpmath.pi**2 / 6 + 2 * s)


def cylinder_regsum_pf():
    s = mpmath.nsum(lambda k: mpmath.log(1 - mpmath.exp(-2 * k)), [1, mpmath.inf])
    return float(mpmath.log(2) - mpmath.log(2 * mpmath.pi) + 2 * s - 0.5)


def pf_moment(a, power):
    """PF int_0^inf z^3 (a + z^2)^-power dz via sympy."""
    z, R = sp.symbols("z R", positive=True)
    prim = sp.integrate(z**3 * (a + z**2) ** -power, (z, 0, R))
    return float(sp.limit(prim - sp.log(R) * int(power == 2), R, sp.oo))


# ---- summed traces -----------------------------------------------------------


@pytest.mark.parametrize("z", [0.5, 2.0, 7.0, 40.0])
def test_sum_trace2_cylinder(cyl, z):
    assert sum_trace2(cyl, z).value == pytest.approx(brute_sum(z), rel=1e-9)


@pytest.mark.parametrize("z", [1.0, 20.0])
def test_sum_trace2_radius_two(r2, z):
    assert sum_trace2(r2, z).value == pytest.approx(brute_sum(z, scale=2), rel=1e-9)


def test_sum_trace2_leading_order(cyl):
    z = 500.0
    assert z * z * sum_trace2(cyl, z).value == pytest.approx(0.5, abs=2e-3)


def test_single_mode_is_resolvent_trace(cyl):
    op = SLOperator(1.0, 0.0, 0.0)
    assert cyl.trace2(0, 1.5) == pytest.approx(resolvent_trace(op, 1.5, 2), rel=1e-14)


def test_sum_trace2_rejects_nonpositive_z(cyl):
    with pytest.raises(ValueError):
        sum_trace2(cyl, 0.0)


def test_multiplicity():
    assert OperatorFamily.multiplicity(0) == 1
    assert OperatorFamily.multiplicity(3) == 2


# ---- expansion of the summed trace -------------------------------------------


def test_sum_expansion_cylinder(cyl):
    e = fit_sum_expansion(cyl)
    assert e.a[2] == pytest.approx(0.5, abs=1e-3)
    assert e.a[3] == pytest.approx(-math.pi / 4, abs=1e-3)
    assert e.zeta0 == pytest.approx(0.0, abs=1e-3)


def test_sum_expansion_exponential(expo):
    e = fit_sum_expansion(expo)
    assert e.a[2] == pytest.approx((math.e - 1) / 2, abs=1e-3)


def test_mode_expansion_starts_one_order_later(cyl):
    single = mode_expansion_start(cyl, 1.0)
    assert abs(single[2]) < 1e-6
    assert single[3] == pytest.approx(0.25, abs=1e-4)
    assert abs(fit_sum_expansion(cyl).a[2]) > 0.1


# ---- corrections ---------------------------------------------------------------


def test_corrections_cylinder(cyl):
    c = corrections(cyl)
    assert c.log_term == pytest.approx(0.0, abs=1e-4)
    assert c.h1_term == pytest.approx(2 * -0.5 * pf_moment(1, 2), abs=1e-4)
    assert c.b2_term == pytest.approx(2 / 6 * -0.75 * pf_moment(1, sp.Rational(5, 2)), abs=1e-4)
    assert c.total == pytest.approx(1 / 3, abs=1e-4)


def test_corrections_radius_two(r2):
    c = corrections(r2)
    # h1 = -1/2 (lam^2/4 + z^2)^-2, d_lam h0 = -3/16 (1/4 + z^2)^-5/2 at lam = 1
    assert c.h1_term == pytest.approx(-pf_moment(sp.Rational(1, 4), 2), abs=1e-4)
    assert c.h1_term == pytest.approx(0.5 - math.log(2), abs=1e-4)
    assert c.b2_term == pytest.approx(-1 / 16 * pf_moment(sp.Rational(1, 4), sp.Rational(5, 2)),
                                      abs=1e-4)
    assert c.b2_term == pytest.approx(-1 / 12, abs=1e-4)


def test_corrections_exponential(expo):
    c = corrections(expo)
    # the two boundary contributions of h1 cancel: -(log V + 1)/2 at V = 1 and e^-2
    assert c.h1_term == pytest.approx(0.0, abs=1e-4)
    # b2 term is -(1/6) int sqrt(V) dx
    assert c.b2_term == pytest.approx(-(1 - math.exp(-1)) / 6, abs=1e-4)
    assert abs(c.log_term) > 0.1


def test_corrections_validate_sign(cyl):
    with pytest.raises(ValueError):
        corrections(cyl, sigma=0)


# ---- determinants ---------------------------------------------------------------


def test_direct_cylinder(cyl):
    exact = cylinder_logdet()
    pf = logdet_direct(cyl, "pf")
    zeta = logdet_direct(cyl, "zeta")
    assert pf.value == pytest.approx(exact, abs=2e-4)
    assert zeta.value == pytest.approx(exact, abs=2e-4)
    assert abs(pf.value - exact) <= 1e-6


def test_direct_conventions_differ_by_zeta0(r2):
    pf, zeta = logdet_direct(r2, "pf"), logdet_direct(r2, "zeta")
    assert pf.value - zeta.value == pytest.approx(pf.diagnostics["zeta0"], abs=1e-15)


def test_direct_radius_two(r2):
    assert logdet_direct(r2, "pf").value == pytest.approx(-math.pi**2 / 3, abs=1e-4)


def test_direct_rejects_zero_mode():
    with pytest.raises(SturmError):
        logdet_direct(OperatorFamily(1.0, 0.0, "n", "n"))


@pytest.fixture(scope="module")
def cyl_pf(cyl):
    return logdet_decomposed(cyl, "pf")


def test_decomposed_cylinder_pf(cyl_pf):
    assert cyl_pf.regsum == pytest.approx(cylinder_regsum_pf(), abs=2e-4)
    assert cyl_pf.discrepancy <= 3e-4
    assert cyl_pf.assembled == pytest.approx(cylinder_logdet(), abs=3e-4)
    assert not cyl_pf.failures


def test_decomposed_cylinder_zeta(cyl):
    rep = logdet_decomposed(cyl, "zeta")
    assert rep.regsum == pytest.approx(cylinder_regsum_pf() + 0.5, abs=2e-4)
    assert rep.assembled == pytest.approx(cylinder_logdet(), abs=3e-4)
    assert rep.discrepancy <= 3e-4


def test_mode_conventions(cyl_pf):
    for m in cyl_pf.mode_logdets:
        assert m["pf"] - m["zeta"] == pytest.approx(-0.5, abs=1e-6)
        lam = m["lam"]
        exact = math.log(2.0) if lam == 0 else math.log(2 * math.sinh(lam) / lam)
        assert m["zeta"] == pytest.approx(exact, abs=1e-9)
        if "pf_direct" in m:
            assert m["pf_direct"] == pytest.approx(m["pf"], abs=1e-6)
    assert cyl_pf.zeta0_modes == pytest.approx([-0.5] * 3, abs=1e-6)


def test_report_json_fields(cyl_pf):
    data = json.loads(cyl_pf.to_json())
    for key in ("mode_logdets", "regsum", "corrections", "zeta0_modes", "zeta0_sum",
                "assembled", "direct", "discrepancy", "convention", "sigma"):
        assert key in data


def test_decomposed_radius_two(r2):
    rep = logdet_decomposed(r2, "pf")
    assert rep.discrepancy <= 1e-3
    assert rep.assembled == pytest.approx(-math.pi**2 / 3, abs=1e-5)


def test_sigma_resolution(expo):
    res = resolve_sigma(expo)
    assert res["passing"] == [1]
    c = corrections(expo)
    gap = abs(res["discrepancy"][1] - res["discrepancy"][-1])
    assert gap == pytest.approx(2 * abs(c.log_term), rel=1e-2)


@pytest.mark.parametrize("convention", ["pf", "zeta"])
def test_identity_exponential(expo, convention):
    rep = logdet_decomposed(expo, convention)
    assert rep.sigma == 1
    assert rep.discrepancy <= 1e-3


def test_decompose_requires_invertible_modes():
    fam = OperatorFamily(1.0, 0.0, "n", "n")
    with pytest.raises(SturmError):
        logdet_decomposed(fam)


def test_decomp_error_is_arithmetic():
    assert issubclass(DecompError, ArithmeticError)


def test_gelfand_yaglom_matches_mode_entry(cyl_pf):
    op = SLOperator(1.0, 0.0, 3.0)
    assert logdet(op).value == pytest.approx(cyl_pf.mode_logdets[3]["zeta"], rel=1e-14)
