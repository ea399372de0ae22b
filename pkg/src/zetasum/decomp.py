"""Direct sums ``Delta = sum_lam Delta_lam`` of Sturm-Liouville families.

A family is fixed by ``V, W`` and two boundary conditions; its modes are
``Delta_lam = -d^2/dx^2 + lam^2 V + W`` for ``lam`` in the integers, with
``Delta_lam = Delta_-lam`` so each ``lam >= 1`` counts twice.

Two routes to ``log det Delta`` are compared here.  The direct one applies
the partie-finie resolvent formula to the summed trace
``S(z) = sum_lam Tr (Delta_lam + z^2)^-2``.  The decomposed one takes the
regularized bilateral sum of the mode determinants and adds the three
correction terms coming from the joint ``(lam, z)`` expansion of the mode
traces.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Chebyshev

from .config import parallel_map
from .homog import QuarterPlaneFunction, HomogeneousFunction, fubini_sum_corrections
from .phg import PhgExpansion, extract_phg, interior_h0
from .regcal import (
    AsymptoticModel,
    AsymptoticExpansion,
    RegValue,
    fit_expansion,
    reg_int,
    reg_sum_bilateral,
)
from .sturm import (
    ZERO_MODE,
    BoundaryCondition,
    SLOperator,
    SturmError,
    logdet,
    lowest_eigenvalue,
    resolvent_trace,
)

# Sign of the h_2 log-term in the correction bundle.  Fixed by the check in
# ``resolve_sigma`` on the r = e^x family, where only this sign closes the
# decomposition identity.
DEFAULT_SIGMA = 1


class DecompError(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# families


@dataclass(eq=False)
class OperatorFamily:
    V: object = 1.0
    W: object = 0.0
    bc0: object = "d"
    bc1: object = "d"
    name: str = "family"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.bc0 = BoundaryCondition.parse(self.bc0)
        self.bc1 = BoundaryCondition.parse(self.bc1)
        self.base = SLOperator(self.V, self.W, 0.0, self.bc0, self.bc1)

    def operator(self, lam: float) -> SLOperator:
        return self.base.with_lambda(abs(float(lam)))

    @staticmethod
    def multiplicity(lam: int) -> int:
        """Weight of ``|lam|`` when the bilateral sum is folded onto ``lam >= 0``."""
        return 1 if lam == 0 else 2

    @cached_property
    def v_values(self) -> np.ndarray:
        xs = np.linspace(0.0, 1.0, 201)
        return self.operator(1.0).potential(xs) - self.base.potential(xs)

    @property
    def r_scale(self) -> float:
        return 1.0 / math.sqrt(float(np.min(self.v_values)))

    @cached_property
    def threshold(self) -> int:
        """Smallest ``N`` such that every mode with ``|lam| >= N`` is invertible."""
        mu0 = lowest_eigenvalue(self.base)
        if mu0 < -ZERO_MODE:
            raise SturmError(f"mode lam = 0 has a negative eigenvalue {mu0:.6g}")
        lam = 0
        while abs(lowest_eigenvalue(self.operator(lam))) < ZERO_MODE:
            lam += 1
            if lam > 64:
                raise SturmError("no invertible mode found up to |lam| = 64")
        return lam

    @cached_property
    def far_ratio(self) -> float:
        """``lim lam^3 Tr (Delta_lam + z^2)^-2`` as ``lam -> inf`` at fixed ``z``."""
        return interior_h0(self.V, 1.0, 0.0)

    def trace2(self, lam: float, z: float) -> float:
        key = (abs(float(lam)), float(z))
        val = self._cache.get(key)
        if val is None:
            val = resolvent_trace(self.operator(lam), float(z), 2)
            self._cache[key] = val
        return val

    def summed_trace2(self, z: float) -> RegValue:
        """Cached :func:`sum_trace2`."""
        key = ("S", float(z))
        if key not in self._cache:
            self._cache[key] = sum_trace2(self, float(z))
        return self._cache[key]

    def describe(self) -> dict:
        return {"name": self.name, "bc0": self.bc0.name, "bc1": self.bc1.name}


# --------------------------------------------------------------------------
# summed traces


def _lambda_cut(family: OperatorFamily, z: float, cap: int = 64) -> int:
    return max(family.threshold + 8, min(int(math.ceil(4.0 * z)), cap))


def sum_trace2(family: OperatorFamily, z: float, *, nodes: int = 32, reach: float = 20.0,
               far: int = 200_000) -> RegValue:
    """``sum_{lam in Z} Tr (Delta_lam + z^2)^-2``.

    Modes with ``|lam| <= Lambda`` are summed one by one.  Beyond ``Lambda`` the
    summand is smooth in ``lam``: after dividing out ``(lam^2 + z^2)^(-3/2)``
    it is interpolated in ``u`` with ``lam = Lambda + c u / (1 - u)``.  Nodes
    stop at ``lam = Lambda + reach c`` because very large ``lam`` makes the
    shooting stiff.  At ``u = 1`` the ratio is pinned to its limit, the
    interior coefficient ``1/4 int V^(-3/2)``, so nothing is extrapolated.  It
    is summed up to ``Lambda + far`` and the rest is the Euler-Maclaurin
    integral with its first endpoint terms.
    """
    if not z > 0:
        raise ValueError("z must be positive")
    L = _lambda_cut(family, z)
    lams = np.arange(0, L + 1)
    vals = np.array(parallel_map(lambda l: family.trace2(l, z), lams))
    explicit = math.fsum(family.multiplicity(int(l)) * v for l, v in zip(lams, vals))

    c = max(float(z), float(L))
    weight = lambda lam: (lam * lam + z * z) ** -1.5
    lam_of = lambda u: L + c * u / (1.0 - u)
    u_cap = reach / (reach + 1.0)
    k = np.arange(nodes)
    u = 0.5 * u_cap * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * nodes)))
    samples = np.array(parallel_map(lambda uu: family.trace2(lam_of(uu), z), u))
    # at u = 1 the ratio tends to the interior coefficient 1/4 int V^(-3/2)
    P = Chebyshev.fit(np.append(u, 1.0), np.append(samples / weight(lam_of(u)), family.far_ratio),
                      nodes, domain=[0.0, 1.0])

    # held-out checks between the nodes and one beyond the last node
    probe = np.append(0.5 * (u[:-1] + u[1:])[:: max(1, nodes // 4)], 0.5 * (1.0 + u_cap))
    exact = np.array([family.trace2(lam_of(p), z) for p in probe])
    interp_err = float(np.max(np.abs(P(probe) * weight(lam_of(probe)) - exact) / np.abs(exact)))
    if interp_err > 1e-7:
        raise DecompError(f"lam-tail interpolation error {interp_err:.3g} at z = {z}; "
                          "tail not in its asymptotic regime")

    F = lambda lam: P((lam - L) / (lam - L + c)) * weight(lam)
    mid = np.arange(L + 1, L + far + 1, dtype=float)
    middle = math.fsum(F(mid))
    # Euler-Maclaurin beyond Lend: integral, -F/2 and -B2/2 F'
    Lend = float(L + far)
    u_end = (Lend - L) / (Lend - L + c)
    x, w = np.polynomial.legendre.leggauss(40)
    uu = u_end + (1.0 - u_end) * 0.5 * (x + 1.0)
    jac = c / (1.0 - uu) ** 2
    integral = 0.5 * (1.0 - u_end) * float(np.dot(w, P(uu) * weight(lam_of(uu)) * jac))
    FL = float(F(Lend))
    dF = -3.0 * FL / Lend
    tail = integral - 0.5 * FL - dF / 12.0
    remainder = abs(60.0 * FL / Lend**5) / 720.0
    total = explicit + 2.0 * (middle + tail)
    err = abs(total) * (interp_err + 1e-11) + 2.0 * remainder
    return RegValue(total, err, {"Lambda": L, "explicit": explicit, "tail": 2.0 * (middle + tail),
                                 "interp_error": interp_err})


@dataclass
class SumExpansion:
    """``S(z) ~ sum_k a_k z^-k`` for ``k = 2..K``."""

    a: dict
    expansion: AsymptoticExpansion
    grid: tuple

    @property
    def zeta0(self) -> float:
        return self.a.get(4, 0.0)

    def as_dict(self) -> dict:
        return {"a": {str(k): v for k, v in self.a.items()},
                "residual": self.expansion.residual, "grid": list(self.grid)}


def _tail_grid(family: OperatorFamily, points: int = 28) -> np.ndarray:
    split = 16.0 * max(1.0, family.r_scale)
    return np.geomspace(split, 64.0 * split, points)


def fit_sum_expansion(family: OperatorFamily, K: int = 10) -> SumExpansion:
    zs = _tail_grid(family)
    vals = np.array([family.summed_trace2(z).value for z in zs])
    model = AsymptoticModel.powers([-float(k) for k in range(2, K + 1)])
    exp = fit_expansion((zs, vals), model, rtol=1e-8)
    a = {k: exp.coefficient(-float(k)) for k in range(2, K + 1)}
    return SumExpansion(a, exp, (float(zs[0]), float(zs[-1])))


def mode_expansion_start(family: OperatorFamily, lam: float, *, z0: float = 16.0) -> dict:
    """Leading powers of ``Tr (Delta_lam + z^2)^-2`` for a single mode, from a fit."""
    zs = np.geomspace(z0, z0 * 2.0**7, 24)
    vals = np.array([family.trace2(lam, z) for z in zs])
    model = AsymptoticModel.powers([-float(k) for k in range(2, 11)])
    exp = fit_expansion((zs, vals), model, rtol=1e-8)
    return {k: exp.coefficient(-float(k)) for k in range(2, 6)}


# --------------------------------------------------------------------------
# corrections


@dataclass
class CorrectionBundle:
    log_term: float
    h1_term: float
    b2_term: float
    sigma: int
    error: float = 0.0

    @property
    def total(self) -> float:
        return self.log_term + self.h1_term + self.b2_term

    def as_tuple(self) -> tuple:
        return (self.log_term, self.h1_term, self.b2_term)

    def as_dict(self) -> dict:
        return {"log_term": self.log_term, "h1_term": self.h1_term, "b2_term": self.b2_term,
                "total": self.total, "sigma": self.sigma, "error": self.error}


RAYS = 32
CHECK_RAYS = 28


def family_expansion(family: OperatorFamily, K: int = 4, rays: int = RAYS) -> PhgExpansion:
    """Joint expansion of ``Tr (Delta_lam + z^2)^-2`` for the correction integrals.

    The profiles of anisotropic families (``V`` far from 1) need more rays than
    the extraction default, and the log-term needs ``r0 = 16`` for a clean
    third coefficient.  Results are cached on the family.
    """
    from .phg import sl_trace

    key = ("phg", K, rays)
    if key not in family._cache:
        trace = sl_trace(family.V, family.W, family.bc0, family.bc1)
        r0 = 16.0 * max(1.0, family.r_scale)
        family._cache[key] = extract_phg(trace, K=K, gamma0=3.0, r0=r0, rays=rays,
                                         provenance={"trace": "Tr^-2", **family.describe()})
    return family._cache[key]


def _quarter_plane(phg: PhgExpansion) -> QuarterPlaneFunction:
    # f(z, lam) = z^3 h_i(lam, z) has degree -i; the regularized sum runs over lam
    comps = []
    for c in phg.coefficients[:3]:
        comps.append(HomogeneousFunction(lambda z, lam, c=c: z**3 * c(lam, z), 3.0 - c.gamma,
                                         name=f"z^3 h{c.index}"))
    return QuarterPlaneFunction(comps, name="z^3 Tr^-2")


def _bundle(phg: PhgExpansion, sigma: int) -> CorrectionBundle:
    if len(phg) < 3:
        raise DecompError("corrections need the expansion to order 2")
    b = fubini_sum_corrections(_quarter_plane(phg), 1)
    return CorrectionBundle(-4.0 * sigma * b.log_term, -4.0 * b.half_term,
                            -4.0 * b.bernoulli_terms[0], sigma, 4.0 * b.error)


def corrections(family: OperatorFamily | None = None, phg: PhgExpansion | None = None,
                sigma: int = DEFAULT_SIGMA) -> CorrectionBundle:
    """``(sigma 4 int z^3 h2 log z, 2 PF int z^3 h1, 2 B2 PF int z^3 d_lam h0)`` at ``lam = 1``.

    These are the Fubini corrections for the one-sided sum over ``lam >= 1``
    scaled by ``-4``: a factor 2 from the two signs of ``lam`` and ``-2`` from
    the determinant formula.  With a family at hand the error estimate also
    includes the change under a coarser ray grid.
    """
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if phg is None:
        if family is None:
            raise ValueError("need a family or an extracted expansion")
        phg = family_expansion(family)
    out = _bundle(phg, sigma)
    if family is not None:
        coarse = _bundle(family_expansion(family, len(phg) - 1, CHECK_RAYS), sigma)
        out.error += sum(abs(a - b) for a, b in zip(out.as_tuple(), coarse.as_tuple()))
    return out


# --------------------------------------------------------------------------
# determinants


def _check_convention(convention: str):
    if convention not in ("pf", "zeta"):
        raise ValueError("convention must be 'pf' or 'zeta'")


def logdet_direct(family: OperatorFamily, convention: str = "pf") -> RegValue:
    """``-2 PF int_0^inf z^3 S(z) dz``, minus ``zeta(0, Delta)`` in the zeta convention."""
    _check_convention(convention)
    if family.threshold > 0:
        raise SturmError("the direct route needs every mode to be invertible")

    def integrand(z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.array([zi**3 * family.summed_trace2(zi).value for zi in z])

    # the tail expansion is fitted on [split, 64 split]; far larger z would
    # need very large lam in the mode sum, where shooting gets expensive
    zs = _tail_grid(family)
    split = float(zs[0])
    vals = integrand(zs)
    model = AsymptoticModel.powers([1.0 - k for k in range(9)])
    exp = fit_expansion((zs, vals), model)
    alt = fit_expansion((zs, vals), AsymptoticModel.powers([1.0 - k for k in range(10)]))
    # sensitivity to the fit window: refit on the lower two thirds
    head = fit_expansion((zs[:19], vals[:19]), AsymptoticModel.powers([1.0 - k for k in range(8)]))
    trunc = (abs(alt.tail_integral(split) - exp.tail_integral(split))
             + abs(head.tail_integral(split) - exp.tail_integral(split)))
    val = reg_int(integrand, 0.0, math.inf, expansion_at_infinity=exp, split=split)
    a4 = exp.coefficient(-1.0)
    pf = -2.0 * val.value
    err = 2.0 * (val.error + trunc)
    diag = {"zeta0": a4, "a2": exp.coefficient(1.0), "a3": exp.coefficient(0.0),
            "evaluations": sum(1 for k in family._cache if k[0] == "S"), "pf": pf,
            "a4_shift": abs(alt.coefficient(-1.0) - a4)}
    if convention == "pf":
        return RegValue(pf, err, diag)
    return RegValue(pf - a4, err + diag["a4_shift"], diag)


def _zeta0_mode(family: OperatorFamily, lam: int) -> float:
    return float(logdet(family.operator(lam), "resolvent_zeta").diagnostics["zeta0"])


@dataclass
class DetReport:
    mode_logdets: list
    regsum: float
    corrections: dict
    zeta0_modes: list
    zeta0_sum: float
    assembled: float
    direct: float | None
    discrepancy: float | None
    convention: str
    sigma: int
    errors: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def _gy(family: OperatorFamily, lam: float) -> float:
    return logdet(family.operator(lam)).value


def logdet_decomposed(family: OperatorFamily, convention: str = "pf", sigma: int | None = None,
                      *, phg: PhgExpansion | None = None, report_modes: int = 6,
                      with_direct: bool = True) -> DetReport:
    """Regularized sum of mode determinants plus corrections, next to the direct value."""
    _check_convention(convention)
    sigma = DEFAULT_SIGMA if sigma is None else sigma
    failures: list = []
    if family.threshold > 0:
        raise SturmError("mode determinants need invertible modes (zero mode at lam = 0)")

    # zeta(0, Delta_lam) does not depend on lam; it is measured on a few modes
    probe = [0, 1, 3]
    zeta0_modes = [_zeta0_mode(family, lam) for lam in probe]
    zeta0 = zeta0_modes[0]
    spread = max(zeta0_modes) - min(zeta0_modes)
    if spread > 1e-6:
        failures.append(f"zeta(0) varies across modes by {spread:.3g}")

    modes = []
    for lam in range(report_modes):
        zeta_ld = _gy(family, lam)
        entry = {"lam": lam, "zeta": zeta_ld, "pf": zeta_ld + zeta0}
        if lam < 2:
            entry["pf_direct"] = logdet(family.operator(lam), "resolvent_pf").value
        modes.append(entry)

    shift = zeta0 if convention == "pf" else 0.0

    def mode(lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        return np.array([_gy(family, abs(l)) + shift for l in lam])

    # GY values carry ~1e-11 noise; long power models amplify it, so a short
    # model is used and a longer one serves as the error estimate
    def model(n):
        return AsymptoticModel(((1.0, 0), (0.0, 1)) + tuple((-float(k), 0) for k in range(1, n + 1)))

    # exponentially small terms decay like exp(-2 lam int sqrt(V)); the
    # switch scales with the family so they stay below 1e-12
    switch = int(math.ceil(16.0 * max(1.0, family.r_scale)))
    rs = reg_sum_bilateral(mode, model(3), span=64, switch=switch)
    alt = reg_sum_bilateral(mode, model(5), span=64, switch=switch)
    rs = RegValue(rs.value, rs.error + abs(alt.value - rs.value), rs.diagnostics)
    bundle = corrections(family, phg, sigma)
    sum_exp = fit_sum_expansion(family)
    zeta0_sum = sum_exp.zeta0

    assembled = rs.value + bundle.total
    if convention == "zeta":
        assembled += zeta0 - zeta0_sum
    direct = discrepancy = None
    errors = {"regsum": rs.error, "corrections": bundle.error,
              "zeta0_sum": sum_exp.expansion.remainder}
    if with_direct:
        try:
            d = logdet_direct(family, convention)
            direct, discrepancy = d.value, abs(assembled - d.value)
            errors["direct"] = d.error
            errors["direct_zeta0"] = d.diagnostics["zeta0"]
        except ArithmeticError as exc:
            failures.append(f"direct: {exc}")
    return DetReport(modes, rs.value, bundle.as_dict(), zeta0_modes, zeta0_sum, assembled,
                     direct, discrepancy, convention, sigma, errors, family.describe(), failures)


def resolve_sigma(family: OperatorFamily, tol: float = 1e-3) -> dict:
    """Assemble with both signs of the log-term and report which closes the identity."""
    phg = family_expansion(family)
    direct = logdet_direct(family, "pf").value
    out = {}
    for s in (1, -1):
        rep = logdet_decomposed(family, "pf", s, phg=phg, with_direct=False)
        out[s] = abs(rep.assembled - direct)
    passing = [s for s, d in out.items() if d <= tol]
    return {"discrepancy": out, "passing": passing, "direct": direct}
