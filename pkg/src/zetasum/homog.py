"""Homogeneous functions on the quarter plane and regularized Fubini corrections.

A function ``f`` of degree ``alpha`` is stored through its evaluator and,
lazily, through its angular profile ``g(phi) = f(cos phi, sin phi)`` as a
Chebyshev series on ``[0, pi/2]``.  Partial derivatives are taken on the
profile (chain rule in polar coordinates), which keeps them exact up to the
interpolation error.

Conventions: ``c_j`` are the Taylor coefficients of ``s -> f(s, 1)`` at 0,
``d_j`` those of ``s -> f(1, s)``; for ``x -> inf`` one has
``f(x, 1) ~ sum d_j x**(alpha - j)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev

from .regcal import (
    AsymptoticExpansion,
    AsymptoticModel,
    RegcalError,
    RegValue,
    bernoulli_number,
    fit_expansion,
    pf_tail,
    quad,
    reg_int,
)

HALF_PI = 0.5 * math.pi


def _is_nonneg_int(v: float) -> bool:
    return v > -0.5 and abs(v - round(v)) < 1e-12


class HomogeneousFunction:
    """``f(t x, t y) = t**degree f(x, y)`` on the closed quarter plane minus 0."""

    def __init__(self, func: Callable | None, degree: float, *, name: str = "",
                 profile: Chebyshev | None = None, profile_degree: int = 64,
                 edges: Callable | None = None):
        if func is None and profile is None:
            raise ValueError("need an evaluator or a profile")
        self.degree = float(degree)
        self.name = name
        self._func = func
        self._profile = profile
        self._profile_degree = profile_degree
        self._edges: dict = {}
        self._edge_source = edges

    def __repr__(self):
        return f"HomogeneousFunction({self.name or '<f>'}, degree={self.degree})"

    def __call__(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        if not (np.iscomplexobj(x) or np.iscomplexobj(y)):
            x = x.astype(float)
            y = y.astype(float)
        if self._func is not None:
            return np.asarray(self._func(x, y)) + 0.0 * (x + y)
        if np.iscomplexobj(x) or np.iscomplexobj(y):
            raise TypeError("profile representation is real only")
        r = np.hypot(x, y)
        return r**self.degree * self._profile(np.arctan2(y, x))

    @property
    def profile(self) -> Chebyshev:
        if self._profile is None:
            self._profile = Chebyshev.interpolate(
                lambda p: self(np.cos(p), np.sin(p)), self._profile_degree, domain=[0.0, HALF_PI])
        return self._profile

    def slice_x(self, x):
        """``x -> f(x, 1)``."""
        return self(x, 1.0)

    def slice_y(self, y):
        """``y -> f(1, y)``."""
        return self(1.0, y)

    def d_y(self, n: int = 1) -> "HomogeneousFunction":
        """``d^n f / dy^n`` as a homogeneous function of degree ``degree - n``."""
        out = self
        for _ in range(n):
            g = out.profile
            gp = g.deriv()
            a = out.degree
            prof = Chebyshev.interpolate(
                lambda p, g=g, gp=gp, a=a: a * np.sin(p) * g(p) + np.cos(p) * gp(p),
                out._profile_degree, domain=[0.0, HALF_PI])
            out = HomogeneousFunction(None, a - 1.0, profile=prof, name=f"d_y {out.name}",
                                      profile_degree=self._profile_degree,
                                      edges=_edges_d_y(out))
        return out

    def d_x(self, n: int = 1) -> "HomogeneousFunction":
        out = self
        for _ in range(n):
            g = out.profile
            gp = g.deriv()
            a = out.degree
            prof = Chebyshev.interpolate(
                lambda p, g=g, gp=gp, a=a: a * np.cos(p) * g(p) - np.sin(p) * gp(p),
                out._profile_degree, domain=[0.0, HALF_PI])
            out = HomogeneousFunction(None, a - 1.0, profile=prof, name=f"d_x {out.name}",
                                      profile_degree=self._profile_degree,
                                      edges=_edges_d_x(out))
        return out

    def transpose(self) -> "HomogeneousFunction":
        swap = {"c": "d", "d": "c"}
        return HomogeneousFunction(lambda x, y: self(y, x), self.degree, name=f"{self.name}^T",
                                   edges=lambda which, n: self.edge(swap[which], n))

    def edge(self, which: str, count: int = 10) -> np.ndarray:
        key = (which, count)
        if key not in self._edges:
            if self._edge_source is not None:
                self._edges[key] = np.asarray(self._edge_source(which, count), dtype=float)
            else:
                self._edges[key] = edge_coeffs(self, which, count)
        return self._edges[key]


def _edges_d_y(f: HomogeneousFunction) -> Callable:
    # f ~ sum c_j x^j y^(a-j) near x = 0 and f(1, y) = sum d_j y^j
    def source(which, n):
        j = np.arange(n)
        if which == "c":
            return (f.degree - j) * f.edge("c", n)
        return (j + 1) * f.edge("d", n + 1)[1:]
    return source


def _edges_d_x(f: HomogeneousFunction) -> Callable:
    def source(which, n):
        j = np.arange(n)
        if which == "c":
            return (j + 1) * f.edge("c", n + 1)[1:]
        return (f.degree - j) * f.edge("d", n)
    return source


def _contour_coeffs(fn, count: int, radius: float, n: int = 64) -> np.ndarray | None:
    theta = 2.0 * math.pi * np.arange(n) / n
    try:
        with np.errstate(all="raise"), warnings.catch_warnings():
            warnings.simplefilter("error", np.exceptions.ComplexWarning)
            vals = np.asarray(fn(radius * np.exp(1j * theta)), dtype=complex)
    except (TypeError, ValueError, FloatingPointError, ArithmeticError,
            np.exceptions.ComplexWarning):
        return None
    if vals.shape != theta.shape or not np.all(np.isfinite(vals)):
        return None
    coef = np.fft.fft(vals) / n
    return coef[:count].real / radius ** np.arange(count)


def edge_coeffs(f: "HomogeneousFunction", edge: str, count: int, *, radius: float = 0.25,
                degree: int = 28, tol: float = 1e-9) -> np.ndarray:
    """First *count* Taylor coefficients of the slice at the ``c`` or ``d`` edge.

    When the evaluator accepts complex arguments the coefficients come from
    a trapezoidal Cauchy integral on ``|s| = radius``; the result is checked
    against the real slice.  Otherwise the slice is interpolated on
    ``[0, radius]`` and the interpolant is differentiated at 0, which is
    noticeably less accurate beyond the first few coefficients.
    """
    if edge == "c":
        fn = lambda s: f(s, 1.0)
    elif edge == "d":
        fn = lambda s: f(1.0, s)
    else:
        raise ValueError(f"edge must be 'c' or 'd', not {edge!r}")
    probe = np.linspace(0.0, 0.5 * radius, 9)
    real = np.asarray(fn(probe), dtype=float)
    scale = max(1.0, float(np.max(np.abs(real))))
    out = _contour_coeffs(fn, max(count, 24), radius)
    if out is not None:
        series = np.polynomial.polynomial.polyval(probe, out)
        if float(np.max(np.abs(series - real))) <= tol * scale:
            return out[:count]
    cheb = Chebyshev.interpolate(fn, degree, domain=[0.0, radius])
    mid = np.linspace(0.0, radius, 37)[1:-1] + radius / 97.0
    miss = float(np.max(np.abs(cheb(mid) - fn(mid))))
    if miss > tol * scale:
        raise RegcalError(f"edge slice not resolved by interpolation (error {miss:.2g})")
    out = np.empty(count)
    d = cheb
    for j in range(count):
        out[j] = d(0.0) / math.factorial(j)
        d = d.deriv()
    return out


def edge_coefficient(f: HomogeneousFunction, which: str, j: float, count: int = 10) -> float:
    """``c_j`` / ``d_j`` with the convention that a non-integer index gives 0."""
    if not _is_nonneg_int(j):
        return 0.0
    j = int(round(j))
    if j >= count:
        count = j + 1
    return float(f.edge(which, count)[j])


# --------------------------------------------------------------------------
# slice integrals


def _slice_expansion(f: HomogeneousFunction, x0: float, count: int = 18,
                     log_power: int = 0) -> AsymptoticExpansion:
    # f(x, 1) ~ sum_j d_j x^(alpha - j) for x -> inf
    d = f.edge("d", count)
    coeffs = {(round(f.degree - j, 10) + 0.0, log_power): float(d[j]) for j in range(count)}
    rem = abs(d[-1]) * x0 ** (f.degree - count + 2) + 1e-16
    return AsymptoticExpansion(coeffs, "infinity", rem, 0.0, 1.0, 0.0, (x0, x0))


def slice_regint(f: HomogeneousFunction, z: float, *, log_weight: bool = False,
                 split: float = 8.0) -> RegValue:
    """``PF int_z^inf f(x, 1) [log x] dx`` with the tail from the ``d`` edge."""
    if math.isinf(z):
        return RegValue(0.0)
    x0 = max(split, 4.0 * z)
    exp = _slice_expansion(f, x0, log_power=1 if log_weight else 0)
    if log_weight:
        g = lambda x: f.slice_x(x) * np.log(x)
    else:
        g = f.slice_x
    return reg_int(g, z, math.inf, expansion_at_infinity=exp, split=x0)


def slice_regint_y(f: HomogeneousFunction, z: float, **kw) -> RegValue:
    """``PF int_z^inf f(1, y) dy``."""
    return slice_regint(f.transpose(), z, **kw)


# --------------------------------------------------------------------------
# double integrals (closed form and nested)


def _double_closed(f: HomogeneousFunction, a: float, b: float) -> RegValue:
    al = f.degree
    if a == 0.0 and b == 0.0:
        return RegValue(0.0)
    parts = []
    if abs(al + 2.0) > 1e-12:
        p = al + 2.0
        if a > 0:
            parts.append(slice_regint_y(f, b / a).scaled(-(a**p) / p))
        if b > 0:
            parts.append(slice_regint(f, a / b).scaled(-(b**p) / p))
        c = edge_coefficient(f, "c", al + 1.0)
        d = edge_coefficient(f, "d", al + 1.0)
        parts.append(RegValue(-c * pf_tail(al + 1.0, 1, a) - d * pf_tail(al + 1.0, 1, b)))
    else:
        if a > 0:
            parts.append(slice_regint_y(f, b / a).scaled(-math.log(a)))
        if b > 0:
            parts.append(slice_regint(f, a / b).scaled(-math.log(b)))
            parts.append(slice_regint(f, a / b, log_weight=True).scaled(-1.0))
    total = RegValue(0.0)
    for p in parts:
        total = total + p
    return total


def _inner_y(f: HomogeneousFunction, x: float, b: float, count: int = 10) -> float:
    # PF int_b^inf f(x, y) dy, tail from f(x, y) ~ sum c_j x^j y^(alpha - j)
    c = f.edge("c", count)
    y0 = max(8.0, 8.0 * x, 2.0 * b)
    coeffs = {(round(f.degree - j, 10) + 0.0, 0): float(c[j]) * x**j for j in range(count)}
    exp = AsymptoticExpansion(coeffs, "infinity", 0.0, 0.0, 1.0, 0.0, (y0, y0))
    return reg_int(lambda y: f(x, y), b, math.inf, expansion_at_infinity=exp, split=y0).value


def nested_double_integral(f: HomogeneousFunction, a: float, b: float, *,
                           terms: int = 8) -> RegValue:
    """``PF int_a^inf PF int_b^inf f(x, y) dy dx`` by iterated regularized integrals."""
    if a == 0.0 and b == 0.0:
        return RegValue(0.0)
    al = f.degree
    outer = np.vectorize(lambda x: _inner_y(f, float(x), b))
    logs = {al + 1.0: 1} if _is_nonneg_int(al + 1.0) else {}
    model = AsymptoticModel.powers([al + 1.0] + [al - j for j in range(terms)], logs)
    start = max(16.0, 4.0 * a, 4.0 * b)
    return reg_int(outer, a, math.inf, model, split=start)


def hom_double_integral(f: HomogeneousFunction, a: float, b: float,
                        method: str = "closed", order: str = "yx") -> RegValue:
    """Regularized iterated integral of a homogeneous function over ``[a,inf) x [b,inf)``.

    ``order="yx"`` integrates over ``y`` first, ``"xy"`` over ``x`` first.
    ``method`` selects the closed-form evaluation or nested quadrature.
    """
    if a < 0 or b < 0:
        raise ValueError("limits must be nonnegative")
    if order == "xy":
        return hom_double_integral(f.transpose(), b, a, method, "yx")
    if order != "yx":
        raise ValueError(f"unknown order {order!r}")
    if method == "closed":
        return _double_closed(f, a, b)
    if method == "nested":
        return nested_double_integral(f, a, b)
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# scaled limits and limit exchange


def scaled_tail_limit(f: HomogeneousFunction, b: float, direction: str = "infinity",
                      *, terms: int = 8) -> RegValue:
    """``LIM z**(alpha+2) PF int_{b/z}^inf f(1, y) dy`` (``log z`` instead of the power if alpha = -2)."""
    al = f.degree
    crit = abs(al + 2.0) < 1e-12

    def h(z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        vals = np.array([slice_regint_y(f, b / t).value for t in z])
        return vals if crit else vals * z ** (al + 2.0)

    # for alpha = -2 the bracket is fitted alone: log(z) times a pure power
    # series has no z**0 log(z)**0 term, so its regularized limit vanishes
    if direction == "infinity":
        if crit:
            model = AsymptoticModel.powers([-float(j) for j in range(terms)])
        else:
            model = AsymptoticModel.powers([al + 2.0] + [al + 1.0 - j for j in range(terms)])
        grid = np.geomspace(8.0 * b, 8.0 * b * 2.0**8, 3 * len(model) + 6)
    else:
        if crit:
            model = AsymptoticModel.powers([float(j) for j in range(terms)], direction="zero")
        else:
            model = AsymptoticModel.powers([al + 2.0] + [float(j) for j in range(1, terms)],
                                           {al + 2.0: 1}, direction="zero")
        grid = np.geomspace(b / 8.0 * 2.0**-8, b / 8.0, 3 * len(model) + 6)
    exp = fit_expansion(h, model, grid)
    if crit:
        return RegValue(0.0, exp.remainder, {"expansion": exp})
    return RegValue(exp.limit(), exp.limit_error + exp.remainder, {"expansion": exp})


def limit_exchange(f: HomogeneousFunction, a: float = 0.0, *, terms: int = 8,
                   fd_point: float = 3.0, fd_step: float = 1e-3):
    """Both sides of exchanging ``LIM_{y -> inf}`` with ``PF int_a^inf dx``.

    Returns ``(lhs, rhs, corr, derivative_check)`` where ``corr`` is the
    correction for degree -1 and ``derivative_check`` holds both sides of
    exchanging ``d/dy`` with the integral at ``y = fd_point``.
    """
    al = f.degree
    corr = slice_regint(f, 0.0) if abs(al + 1.0) < 1e-12 else RegValue(0.0)

    def G(y):
        y = float(y)
        d = f.edge("d", 10)
        x0 = max(8.0, 8.0 * y, 2.0 * a)
        coeffs = {(round(al - j, 10) + 0.0, 0): float(d[j]) * y**j for j in range(10)}
        exp = AsymptoticExpansion(coeffs, "infinity", 0.0, 0.0, 1.0, 0.0, (x0, x0))
        return reg_int(lambda x: f(x, y), a, math.inf, expansion_at_infinity=exp, split=x0).value

    logs = {al + 1.0: 1} if _is_nonneg_int(al + 1.0) else {}
    model = AsymptoticModel.powers([al + 1.0] + [al - j for j in range(terms)], logs)
    y0 = max(8.0, 8.0 * a)
    exp = fit_expansion(np.vectorize(G), model, np.geomspace(y0, y0 * 2.0**8, 3 * len(model) + 6))
    lhs = RegValue(exp.limit(), exp.limit_error + exp.remainder, {"expansion": exp})
    if _is_nonneg_int(al):
        c_al = edge_coefficient(f, "c", al)
        inner = c_al * pf_tail(al, 0, a)
    else:
        inner = 0.0
    rhs = RegValue(inner) + corr
    fy = f.d_y()
    num = (G(fd_point + fd_step) - G(fd_point - fd_step)) / (2.0 * fd_step)
    d = fy.edge("d", 10)
    x0 = max(8.0, 8.0 * fd_point, 2.0 * a)
    coeffs = {(round(fy.degree - j, 10) + 0.0, 0): float(d[j]) * fd_point**j for j in range(10)}
    exp_y = AsymptoticExpansion(coeffs, "infinity", 0.0, 0.0, 1.0, 0.0, (x0, x0))
    ana = reg_int(lambda x: fy(x, fd_point), a, math.inf, expansion_at_infinity=exp_y,
                  split=x0).value
    return lhs, rhs, corr, {"finite_difference": num, "exchanged": ana}


# --------------------------------------------------------------------------
# Fubini corrections


@dataclass
class QuarterPlaneFunction:
    """Sum of homogeneous components of strictly decreasing degree plus a remainder."""

    components: list
    remainder: Callable | None = None
    delta: float = 1.0
    name: str = ""

    def __post_init__(self):
        degrees = [c.degree for c in self.components]
        if any(b >= a for a, b in zip(degrees, degrees[1:])):
            raise ValueError("component degrees must be strictly decreasing")

    def component(self, degree: float) -> HomogeneousFunction | None:
        for c in self.components:
            if abs(c.degree - degree) < 1e-12:
                return c
        return None

    def __call__(self, x, y):
        out = sum(c(x, y) for c in self.components)
        if self.remainder is not None:
            out = out + self.remainder(x, y)
        return out


@dataclass
class FubiniCorrections:
    log_term: float
    half_term: float
    bernoulli_terms: list
    error: float = 0.0
    fd_check: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.log_term + self.half_term + math.fsum(self.bernoulli_terms)

    def as_tuple(self) -> tuple:
        return (self.log_term, self.half_term, math.fsum(self.bernoulli_terms))


def fubini_int_correction(f: HomogeneousFunction | None) -> RegValue:
    """``int_0^inf f(x, 1) log x dx`` for a degree -2 function (absent means 0)."""
    if f is None:
        return RegValue(0.0)
    if abs(f.degree + 2.0) > 1e-12:
        raise ValueError(f"correction needs degree -2, got {f.degree}")
    return slice_regint(f, 0.0, log_weight=True)


def _fd_derivative_check(f: HomogeneousFunction, n: int, xs: Sequence[float],
                         rel_step: float = 1e-4) -> float:
    # compare d_y^n f at (x, 1) with a central difference of d_y^(n-1) f
    lower = f.d_y(n - 1) if n > 1 else f
    exact = f.d_y(n)
    worst = 0.0
    for x in xs:
        h = rel_step * max(1.0, abs(x))
        fd = (lower(x, 1.0 + h) - lower(x, 1.0 - h)) / (2.0 * h)
        worst = max(worst, abs(float(fd) - float(exact(x, 1.0))) / max(1.0, abs(float(fd))))
    return worst


def fubini_sum_corrections(f: QuarterPlaneFunction, M: int = 1) -> FubiniCorrections:
    """Correction terms turning ``PF int sum^reg`` into ``sum^reg PF int``.

    The sum runs over the second argument.  Returns
    ``-int f_{-2}(x,1) log x``, ``-1/2 PF int f_{-1}(x,1)`` and
    ``-B_2k/(2k)! PF int d_2^(2k-1) f_{2k-2}(x,1)`` for ``k = 1..M``.
    """
    err = 0.0
    lg = fubini_int_correction(f.component(-2.0))
    err += lg.error
    f1 = f.component(-1.0)
    half = slice_regint(f1, 0.0) if f1 is not None else RegValue(0.0)
    err += half.error
    bern, checks = [], []
    for k in range(1, M + 1):
        fk = f.component(2.0 * k - 2.0)
        if fk is None:
            bern.append(0.0)
            continue
        deriv = fk.d_y(2 * k - 1)
        val = slice_regint(deriv, 0.0)
        coef = float(bernoulli_number(2 * k)) / math.factorial(2 * k)
        bern.append(-coef * val.value)
        err += abs(coef) * val.error
        checks.append(_fd_derivative_check(fk, 2 * k - 1, (0.1, 0.7, 2.0, 5.0)))
    return FubiniCorrections(-lg.value, -0.5 * half.value, bern, err, checks)


def fubini_sum_sides(f: HomogeneousFunction, lam0: int = 1, M: int = 1):
    """Both sides of the regularized Fubini theorem for sums on a homogeneous *f*.

    Returns ``(integral_of_sum, sum_of_integrals, corrections)``; the first
    should equal the second plus ``corrections.total``.
    """
    from .regcal import reg_sum

    al = f.degree

    def integral_at(lam):
        d = f.edge("d", 18)
        z0 = max(8.0, 8.0 * lam)
        coeffs = {(round(al - j, 10) + 0.0, 0): float(d[j]) * lam**j for j in range(18)}
        exp = AsymptoticExpansion(coeffs, "infinity", 0.0, 0.0, 1.0, 0.0, (z0, z0))
        return reg_int(lambda z: f(z, lam), 0.0, math.inf, expansion_at_infinity=exp,
                       split=z0).value

    ints = np.vectorize(integral_at)
    logs = {al + 1.0: 1}
    model = AsymptoticModel.powers([al + 1.0 - j for j in range(6)], logs)
    rhs = reg_sum(ints, lam0, model=model)

    def summed(z):
        # the lambda-expansion of f(z, lambda) only holds for lambda >> z
        z = float(z)
        mod = AsymptoticModel.powers([al - j for j in range(12)])
        return reg_sum(lambda lam: f(z, lam), lam0, model=mod,
                       switch=max(16, int(8.0 * z) + 1)).value

    summed_v = np.vectorize(summed)
    out_model = AsymptoticModel.powers([al + 1.0 - j for j in range(8)], {al + 1.0: 1})
    lhs = reg_int(summed_v, 0.0, math.inf, out_model)
    comps = QuarterPlaneFunction([f])
    return lhs, rhs, fubini_sum_corrections(comps, M)
