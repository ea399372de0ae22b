"""Hadamard partie-finie calculus on the half line.

Regularized limits, integrals and sums of functions whose behaviour at
infinity (or at zero) is a finite sum of terms ``x**alpha * log(x)**k``
plus a remainder.  Coefficients of such expansions are obtained by a
weighted least-squares fit on a geometric sample grid; everything
downstream (integrals, sums, limits of derivatives) is then evaluated
term by term in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "RegcalError",
    "FitError",
    "AsymptoticModel",
    "AsymptoticExpansion",
    "RegValue",
    "bernoulli",
    "bernoulli_number",
    "pf_tail",
    "pf_head",
    "regint_power_log",
    "fit_expansion",
    "reg_limit",
    "reg_int",
    "quad",
    "change_of_variables",
    "reg_sum",
    "reg_sum_bilateral",
]

_KEY_DIGITS = 10


class RegcalError(ArithmeticError):
    """Raised when a regularized quantity cannot be computed reliably."""


class FitError(RegcalError):
    pass


def _key(alpha: float) -> float:
    return round(float(alpha), _KEY_DIGITS) + 0.0


# --------------------------------------------------------------------------
# Bernoulli numbers and periodic Bernoulli functions


@lru_cache(maxsize=None)
def _bernoulli_table(n: int) -> tuple[Fraction, ...]:
    # B_m = -1/(m+1) sum_{k<m} C(m+1,k) B_k, with B_1 = -1/2
    table = [Fraction(1)]
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * table[k]
        table.append(-acc / (m + 1))
    return tuple(table)


def bernoulli_number(n: int) -> Fraction:
    """Exact Bernoulli number ``B_n`` (convention ``B_1 = -1/2``)."""
    if not 0 <= n <= 64:
        raise ValueError(f"Bernoulli index out of range: {n}")
    return _bernoulli_table(64)[n]


def bernoulli(n: int, x=None):
    """``B_n`` if *x* is None, otherwise the periodic function ``B_n(x - floor(x))``."""
    if not isinstance(n, (int, np.integer)) or not 0 <= n <= 64:
        raise ValueError(f"Bernoulli index out of range: {n}")
    if x is None:
        return float(bernoulli_number(n))
    t = np.asarray(x, dtype=float)
    t = t - np.floor(t)
    out = np.zeros_like(t)
    for k in range(n + 1):
        b = bernoulli_number(k)
        if b:
            out = out + math.comb(n, k) * float(b) * t ** (n - k)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# closed-form partie-finie integrals of x**beta log(x)**k


def pf_tail(beta: float, k: int, x: float) -> float:
    """Partie finie of the integral of ``t**beta * log(t)**k`` over ``[x, inf)``.

    ``x = 0`` gives 0 for every ``beta``, ``k``.
    """
    if x == 0:
        return 0.0
    if x < 0:
        raise ValueError("lower limit must be nonnegative")
    lx = math.log(x)
    if abs(beta + 1.0) < 10.0 ** (-_KEY_DIGITS):
        return -(lx ** (k + 1)) / (k + 1)
    p = beta + 1.0
    xp = x**p
    # integration by parts: J_k = -x^p log^k x / p - (k/p) J_{k-1}
    val = -xp / p
    for j in range(1, k + 1):
        val = -xp * lx**j / p - j / p * val
    return val


def pf_head(beta: float, k: int, x: float) -> float:
    """Partie finie of the integral of ``t**beta * log(t)**k`` over ``[0, x]``."""
    if x == 0:
        return 0.0
    return -pf_tail(beta, k, x)


def regint_power_log(alpha: float, z: float, log_power: int = 0) -> float:
    """``PF int_z^inf x**(alpha+1) log(x)**log_power dx``."""
    return pf_tail(alpha + 1.0, log_power, z)


# --------------------------------------------------------------------------
# models and expansions


@dataclass(frozen=True)
class AsymptoticModel:
    """Exponents and maximal log powers of an expansion.

    ``terms`` is a sequence of ``(alpha, max_log_power)``; ``direction`` is
    ``"infinity"`` (exponents decreasing) or ``"zero"`` (increasing).
    """

    terms: tuple[tuple[float, int], ...]
    direction: str = "infinity"
    delta: float = 1.0

    def __post_init__(self):
        terms = tuple((float(a), int(m)) for a, m in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.direction not in ("infinity", "zero"):
            raise ValueError(f"unknown direction {self.direction!r}")
        alphas = [a for a, _ in terms]
        step = np.diff(alphas)
        if self.direction == "infinity" and np.any(step >= 0):
            raise ValueError("exponents must be strictly decreasing towards infinity")
        if self.direction == "zero" and np.any(step <= 0):
            raise ValueError("exponents must be strictly increasing towards zero")
        if any(m < 0 for _, m in terms):
            raise ValueError("log powers must be nonnegative")
        if self.delta <= 0:
            raise ValueError("remainder decay must be positive")

    @classmethod
    def powers(cls, alphas: Iterable[float], logs: dict | None = None,
               direction: str = "infinity", delta: float = 1.0) -> "AsymptoticModel":
        logs = {_key(a): m for a, m in (logs or {}).items()}
        alphas = sorted({_key(a) for a in alphas}, reverse=direction == "infinity")
        return cls(tuple((a, logs.get(a, 0)) for a in alphas), direction, delta)

    def basis(self) -> list[tuple[float, int]]:
        return [(a, k) for a, m in self.terms for k in range(m + 1)]

    def __len__(self) -> int:
        return len(self.basis())


def _merge(terms: Iterable[tuple[float, int]], direction: str) -> tuple[tuple[float, int], ...]:
    best: dict[float, int] = {}
    for a, m in terms:
        a = _key(a)
        best[a] = max(best.get(a, 0), m)
    return tuple(sorted(best.items(), reverse=direction == "infinity"))


@dataclass
class AsymptoticExpansion:
    """Fitted expansion ``sum a_jk x**alpha_j log(x)**k``.

    ``coeffs`` maps ``(alpha, k)`` to the real coefficient.  ``remainder``
    is the largest discrepancy seen on held-out grid points, ``residual``
    the relative least-squares residual and ``condition`` the condition
    number of the equilibrated design matrix.
    """

    coeffs: dict
    direction: str = "infinity"
    remainder: float = 0.0
    residual: float = 0.0
    condition: float = 1.0
    limit_error: float = 0.0
    grid: tuple[float, float] = (0.0, 0.0)

    def coefficient(self, alpha: float, k: int = 0) -> float:
        return self.coeffs.get((_key(alpha), k), 0.0)

    def limit(self) -> float:
        """Regularized limit: the coefficient of ``x**0 log(x)**0``."""
        return self.coefficient(0.0, 0)

    @property
    def A_inf(self) -> float:
        return self.coefficient(-1.0) if self.direction == "infinity" else 0.0

    @property
    def A_zero(self) -> float:
        return self.coefficient(-1.0) if self.direction == "zero" else 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(x)
        out = np.zeros_like(x)
        for (a, k), c in self.coeffs.items():
            out = out + c * x**a * lx**k
        return out

    def derivative(self, n: int = 1) -> "AsymptoticExpansion":
        """Term-by-term ``n``-th derivative (exact for the represented sum)."""
        coeffs = dict(self.coeffs)
        for _ in range(n):
            new: dict = {}
            for (a, k), c in coeffs.items():
                b = _key(a - 1.0)
                if a != 0.0:
                    new[(b, k)] = new.get((b, k), 0.0) + a * c
                if k:
                    new[(b, k - 1)] = new.get((b, k - 1), 0.0) + k * c
            coeffs = {key: c for key, c in new.items() if c != 0.0}
        return AsymptoticExpansion(coeffs, self.direction, self.remainder,
                                   self.residual, self.condition, self.limit_error, self.grid)

    def tail_integral(self, x: float) -> float:
        """PF integral of the expansion over ``[x, inf)`` (or ``[0, x]`` towards zero)."""
        rule = pf_tail if self.direction == "infinity" else pf_head
        return math.fsum(c * rule(a, k, x) for (a, k), c in sorted(self.coeffs.items()))

    def as_dict(self) -> dict:
        return {
            "terms": [[a, k, c] for (a, k), c in sorted(self.coeffs.items(), reverse=True)],
            "direction": self.direction,
            "remainder": self.remainder,
            "residual": self.residual,
            "condition": self.condition,
        }


@dataclass
class RegValue:
    value: float
    error: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.error = abs(float(self.error))
        if not math.isfinite(self.value):
            raise RegcalError(f"non-finite regularized value: {self.value}")

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "RegValue") -> "RegValue":
        return RegValue(self.value + other.value, self.error + other.error)

    def __sub__(self, other: "RegValue") -> "RegValue":
        return RegValue(self.value - other.value, self.error + other.error)

    def scaled(self, c: float) -> "RegValue":
        return RegValue(c * self.value, abs(c) * self.error, self.diagnostics)


# --------------------------------------------------------------------------
# fitting


def _vectorize(f: Callable) -> Callable:
    def g(x):
        x = np.asarray(x, dtype=float)
        try:
            y = np.asarray(f(x), dtype=float)
            if y.shape == x.shape:
                return y
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(t))) for t in x.ravel()]).reshape(x.shape)

    return g


def _default_grid(model: AsymptoticModel, n: int | None = None) -> np.ndarray:
    n = n or max(3 * len(model) + 6, 24)
    if model.direction == "infinity":
        return np.geomspace(2.0**4, 2.0**20, n)
    return np.geomspace(2.0**-20, 2.0**-4, n)


def _lstsq(xs, ys, basis):
    xm = math.exp(float(np.mean(np.log(xs))))
    t = xs / xm
    lt = np.log(t)
    A = np.column_stack([t**a * lt**k for a, k in basis])
    # rows weighted by the size of the leading term
    a0 = basis[0][0]
    m0 = max(k for a, k in basis if a == a0)
    w = 1.0 / (t**a0 * (1.0 + np.abs(lt)) ** m0)
    Aw = A * w[:, None]
    scale = np.max(np.abs(Aw), axis=0)
    scale[scale == 0] = 1.0
    Aw = Aw / scale
    yw = ys * w
    sol, _, _, sv = np.linalg.lstsq(Aw, yw, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    b = sol / scale
    res = float(np.max(np.abs(Aw @ sol - yw)) / max(np.max(np.abs(yw)), 1e-300))
    # back to the unscaled variable: log t = log x - log xm
    L = math.log(xm)
    coeffs: dict = {}
    for (a, i), bi in zip(basis, b):
        for j in range(i + 1):
            c = bi * xm ** (-a) * math.comb(i, j) * (-L) ** (i - j)
            coeffs[(a, j)] = coeffs.get((a, j), 0.0) + c
    return coeffs, res, cond


def fit_expansion(f, model: AsymptoticModel, grid=None, *, rtol: float = 1e-6,
                  max_condition: float = 1e10, min_gap: float = 1e-6) -> AsymptoticExpansion:
    """Least-squares fit of ``f`` in the basis ``x**alpha log(x)**k`` of *model*.

    *f* is a callable or a pair ``(xs, ys)`` of samples.  Rows are weighted by
    the local size of the basis and columns equilibrated.  Every other grid
    point is held out once to estimate the remainder.
    """
    if callable(f):
        xs = np.asarray(_default_grid(model) if grid is None else grid, dtype=float)
        ys = _vectorize(f)(xs)
    else:
        xs, ys = (np.asarray(v, dtype=float) for v in f)
    if np.any(xs <= 0):
        raise FitError("sample grid must be positive")
    if not np.all(np.isfinite(ys)):
        raise FitError("non-finite samples in fit")
    basis = [(_key(a), k) for a, k in model.basis()]
    span = (float(xs.min()), float(xs.max()))
    if not basis:
        return AsymptoticExpansion({}, model.direction, float(np.max(np.abs(ys))), 0.0, 1.0,
                                   0.0, span)
    alphas = sorted({a for a, _ in basis})
    if len(alphas) > 1 and float(np.min(np.diff(alphas))) < min_gap:
        raise FitError("ill-conditioned expansion basis (near-duplicate exponents)")
    if len(xs) < 2 * len(basis):
        raise FitError(f"grid has {len(xs)} points for {len(basis)} basis functions")
    coeffs, res, cond = _lstsq(xs, ys, basis)
    if cond > max_condition:
        raise FitError(f"ill-conditioned expansion basis (condition {cond:.3g})")
    if res > rtol:
        raise FitError(f"fit residual {res:.3g} above tolerance; model is missing terms")
    remainder = 0.0
    limit_error = 0.0
    if len(xs) >= 2 * len(basis) + 2:
        half, _, _ = _lstsq(xs[::2], ys[::2], basis)
        probe = AsymptoticExpansion(half, model.direction)
        remainder = float(np.max(np.abs(probe(xs[1::2]) - ys[1::2])))
        limit_error = abs(half.get((0.0, 0), 0.0) - coeffs.get((0.0, 0), 0.0))
    return AsymptoticExpansion(coeffs, model.direction, remainder, res, cond, limit_error, span)


def reg_limit(f, model: AsymptoticModel, grid=None, **kw) -> RegValue:
    """Regularized limit: the constant term of the fitted expansion."""
    exp = fit_expansion(f, model, grid, **kw)
    return RegValue(exp.limit(), exp.limit_error + exp.remainder,
                    {"residual": exp.residual, "terms": len(model), "expansion": exp})


# --------------------------------------------------------------------------
# integrals


def quad(f: Callable, a: float, b: float, *, atol: float = 1e-12,
         rtol: float = 1e-10) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod quadrature on geometric panels of ``[a, b]``."""
    if a == b:
        return 0.0, 0.0
    if b < a:
        v, e = quad(f, b, a, atol=atol, rtol=rtol)
        return -v, e
    edges = [a]
    if a == 0.0:
        edges.append(min(b, 1.0))
    while edges[-1] < b:
        nxt = max(edges[-1] * 4.0, edges[-1] + 1.0) if edges[-1] > 0 else b
        edges.append(min(nxt, b))
    edges = sorted(set(edges))
    vals, errs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, *info = integrate.quad(f, lo, hi, epsabs=atol / len(edges), epsrel=rtol,
                                     limit=200, full_output=1)
        if len(info) > 1 and "message" not in str(info[-1]) and e > max(atol, rtol * abs(v)) * 1e3:
            raise RegcalError(f"quadrature did not converge on [{lo}, {hi}]")
        vals.append(v)
        errs.append(e)
    return math.fsum(vals), math.fsum(errs)


def _extended(model: AsymptoticModel) -> AsymptoticModel | None:
    if not model.terms:
        return None
    last = model.terms[-1][0]
    nxt = last - 1.0 if model.direction == "infinity" else last + 1.0
    return AsymptoticModel(model.terms + ((nxt, 0),), model.direction, model.delta)


def _truncation(f, model, grid, exp, x) -> float:
    # change of the tail when the model is extended by one more term
    ext = _extended(model)
    if ext is None:
        return 0.0
    try:
        alt = fit_expansion(f, ext, grid)
    except RegcalError:
        return 0.0
    return abs(alt.tail_integral(x) - exp.tail_integral(x))


def _fit_tail(f, model, start, *, target, points=None):
    best = None
    n = points or max(3 * len(model) + 9, 24)
    x = start
    toward_inf = model.direction == "infinity"
    for _ in range(6):
        grid = np.geomspace(x, x * 2.0**8, n) if toward_inf else np.geomspace(x * 2.0**-8, x, n)
        exp = fit_expansion(f, model, grid)
        err = max(exp.remainder * x / model.delta, _truncation(f, model, grid, exp, x))
        if best is None or err < best[1]:
            best = (exp, err, x)
        if err <= target * max(1.0, abs(exp.tail_integral(x))):
            break
        x = x * 4.0 if toward_inf else x / 4.0
    return best


def reg_int(f, a: float = 0.0, b: float = math.inf,
            model_at_infinity: AsymptoticModel | None = None,
            model_at_zero: AsymptoticModel | None = None, *,
            expansion_at_infinity: AsymptoticExpansion | None = None,
            expansion_at_zero: AsymptoticExpansion | None = None,
            split: float | None = None, atol: float = 1e-12, rtol: float = 1e-10,
            tail_target: float = 1e-11) -> RegValue:
    """Partie-finie integral of *f* over ``[a, b]``.

    The finite core is integrated by adaptive quadrature; a divergent end is
    replaced by the fitted (or supplied) expansion integrated term by term
    with the regularized closed forms.
    """
    if a < 0:
        raise ValueError("lower limit must be nonnegative")
    if a == b:
        return RegValue(0.0)
    if b < a:
        raise ValueError("reg_int requires a <= b")
    g = _vectorize(f)

    def scalar(x):
        return float(g(np.array([x]))[0])

    diag: dict = {}
    lo, hi = a, b
    head = tail = 0.0
    err = 0.0
    if math.isinf(b):
        if expansion_at_infinity is not None:
            exp = expansion_at_infinity
            hi = split or (exp.grid[0] if exp.grid[0] > 0 else max(16.0, 4.0 * a))
            hi = max(hi, a)
            terr = exp.remainder * hi
        else:
            model = model_at_infinity or AsymptoticModel(())
            start = split or max(16.0, 4.0 * a)
            exp, terr, hi = _fit_tail(g, model, start, target=tail_target)
        tail = exp.tail_integral(hi)
        err += terr
        diag["split_infinity"] = hi
        diag["expansion_infinity"] = exp
    if a == 0.0 and (model_at_zero is not None or expansion_at_zero is not None):
        if expansion_at_zero is not None:
            exp0 = expansion_at_zero
            lo = exp0.grid[1] if exp0.grid[1] > 0 else min(2.0**-4, hi)
            herr = exp0.remainder * lo
        else:
            exp0, herr, lo = _fit_tail(g, model_at_zero, min(2.0**-4, hi / 4),
                                          target=tail_target)
        head = exp0.tail_integral(lo)
        err += herr
        diag["split_zero"] = lo
        diag["expansion_zero"] = exp0
    core, qerr = quad(scalar, lo, hi, atol=atol, rtol=rtol)
    err += qerr
    return RegValue(core + head + tail, err, diag)


def change_of_variables(f, scale: float, model_at_infinity: AsymptoticModel | None = None,
                        model_at_zero: AsymptoticModel | None = None, *, tol: float = 1e-8):
    """Both sides of the scaling rule for PF integrals over ``[0, inf)``.

    ``lhs = PF int f``; ``rhs = scale * PF int f(scale x) dx - A_inf log scale +
    A_0 log scale`` where ``A_inf`` and ``A_0`` are the ``1/x`` coefficients.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    g = _vectorize(f)
    lhs = reg_int(g, 0.0, math.inf, model_at_infinity, model_at_zero)
    for key in ("expansion_infinity", "expansion_zero"):
        exp = lhs.diagnostics.get(key)
        if exp is None:
            continue
        for (a, k), c in exp.coeffs.items():
            if a == -1.0 and k >= 1 and abs(c) > tol:
                raise RegcalError("expansion contains x^-1 log^k x terms; scaling rule does not apply")
    inner = reg_int(lambda x: g(scale * np.asarray(x, dtype=float)), 0.0, math.inf,
                    model_at_infinity, model_at_zero)
    a_inf = lhs.diagnostics["expansion_infinity"].A_inf if "expansion_infinity" in lhs.diagnostics else 0.0
    a_zero = lhs.diagnostics["expansion_zero"].A_zero if "expansion_zero" in lhs.diagnostics else 0.0
    log_s = math.log(scale)
    rhs = RegValue(scale * inner.value - a_inf * log_s + a_zero * log_s,
                   scale * inner.error, {"A_inf": a_inf, "A_zero": a_zero})
    return lhs, rhs


# --------------------------------------------------------------------------
# sums


def _partial_sum_model(model: AsymptoticModel, floor: float) -> AsymptoticModel:
    terms = [(0.0, 0)]
    for a, m in model.terms:
        if abs(a + 1.0) < 10.0 ** (-_KEY_DIGITS):
            terms.append((0.0, m + 1))
        else:
            terms.append((a + 1.0, m))
        # f itself, then the odd derivatives of the Euler-Maclaurin terms
        for j in [0] + list(range(1, int(a - floor) + 1, 2)):
            if a - j < floor:
                break
            falling = math.prod(a - i for i in range(j))
            top = m if abs(falling) > 1e-12 else m - 1
            if top >= 0:
                terms.append((a - j, top))
    return AsymptoticModel(_merge(terms, "infinity"))


def _reg_sum_direct(f, lam0, model, grid, floor):
    g = _vectorize(f)
    if grid is None:
        grid = np.unique(np.round(np.geomspace(2.0**5, 2.0**12, 40)).astype(np.int64))
    grid = np.asarray(grid, dtype=np.int64)
    grid = grid[grid >= lam0]
    lam = np.arange(lam0, int(grid.max()) + 1, dtype=float)
    partial = np.cumsum(g(lam))
    sums = partial[grid - lam0]
    pmodel = _partial_sum_model(model, floor)
    exp = fit_expansion((grid.astype(float), sums), pmodel)
    scale = max(1.0, float(np.max(np.abs(sums))) * 1e-16 * len(lam))
    return RegValue(exp.limit(), exp.limit_error + exp.remainder + scale * 1e-3,
                    {"method": "direct", "expansion": exp})


def _em_remainder_bound(exp: AsymptoticExpansion, L: float, M: int) -> float:
    d = exp.derivative(2 * M + 1)
    if not d.coeffs:
        return 0.0
    from scipy.special import zeta as _zeta

    amp = 2.0 * _zeta(2 * M + 1) / (2.0 * math.pi) ** (2 * M + 1)
    # substitute x = L/u to map the half line onto (0, 1]
    val, _ = integrate.quad(lambda u: abs(float(d(L / u))) * L / u**2 if u > 0 else 0.0,
                            0.0, 1.0, limit=200)
    return amp * val


def _reg_sum_em(f, lam0, model, M, switch, tol, span=None):
    g = _vectorize(f)
    L = max(int(lam0), int(switch))
    alpha_top = max((a for a, _ in model.terms), default=-math.inf)
    M = max(M, int(math.floor(alpha_top / 2.0)) + 1, 1)
    explicit = math.fsum(g(np.arange(lam0, L, dtype=float))) if L > lam0 else 0.0
    n = max(3 * len(model) + 6, 24)
    if span is None:
        exp = fit_expansion(g, model, np.geomspace(L, L * 2.0**10, n))
        integral = reg_int(g, float(L), math.inf, model)
    else:
        # one fit on [L, span L] serves both the integral tail and the EM terms
        exp = fit_expansion(g, model, np.geomspace(L, L * float(span), n))
        integral = reg_int(g, float(L), math.inf, expansion_at_infinity=exp,
                           split=L * float(span))
    fL = float(g(np.array([float(L)]))[0])
    bound = _em_remainder_bound(exp, L, M)
    while bound > tol and M < 12:
        M += 1
        bound = _em_remainder_bound(exp, L, M)
    if bound > tol:
        raise RegcalError(f"Euler-Maclaurin remainder {bound:.3g} above tolerance")
    terms = [explicit, integral.value, 0.5 * fL, 0.5 * exp.limit()]
    for k in range(1, M + 1):
        dk = exp.derivative(2 * k - 1)
        b = float(bernoulli_number(2 * k)) / math.factorial(2 * k)
        terms.append(b * (dk.limit() - float(dk(float(L)))))
    err = integral.error + bound + exp.limit_error + exp.remainder
    return RegValue(math.fsum(terms), err,
                    {"method": "euler_maclaurin", "M": M, "switch": L, "expansion": exp,
                     "remainder_bound": bound})


def reg_sum(f, lam0: int = 1, method: str = "euler_maclaurin", M: int = 3,
            model: AsymptoticModel | None = None, *, grid=None, switch: int = 16,
            floor: float = -6.0, tol: float = 1e-13, span: float | None = None) -> RegValue:
    """Partie-finie regularized sum ``sum_{lam >= lam0} f(lam)``.

    ``method="direct"`` fits the expansion of the partial sums and returns its
    constant term.  ``method="euler_maclaurin"`` sums explicitly up to
    ``switch`` and treats the rest with the Euler-Maclaurin formula, where
    the regularized integral, the regularized limits of odd derivatives and
    the derivative values at the switch point all come from the expansion
    of *f* described by *model*.  ``span`` confines all evaluations of *f*
    to ``[lam0, span * switch]``, which matters when *f* gets costly for
    large arguments.
    """
    if lam0 < 1 or int(lam0) != lam0:
        raise ValueError("lam0 must be a positive integer")
    model = model or AsymptoticModel(())
    if method == "direct":
        return _reg_sum_direct(f, int(lam0), model, grid, floor)
    if method == "euler_maclaurin":
        return _reg_sum_em(f, int(lam0), model, M, switch, tol, span)
    raise ValueError(f"unknown summation method {method!r}")


def reg_sum_bilateral(f, model: AsymptoticModel | None = None, *,
                      model_negative: AsymptoticModel | None = None, **kw) -> RegValue:
    """Regularized sum over all integers: both one-sided sums plus ``f(0)``."""
    g = _vectorize(f)
    pos = reg_sum(g, 1, model=model, **kw)
    neg = reg_sum(lambda x: g(-np.asarray(x, dtype=float)), 1,
                  model=model_negative or model, **kw)
    f0 = float(g(np.array([0.0]))[0])
    return RegValue(pos.value + neg.value + f0, pos.error + neg.error,
                    {"positive": pos.value, "negative": neg.value, "zero": f0})
