"""Joint expansions of resolvent traces in ``(lam, z)``.

A trace ``T(lam, z)`` of a Sturm-Liouville family is expanded for large
``r = |(lam, z)|`` as

    T(lam, z) ~ sum_i h_i(lam, z),   h_i(t lam, t z) = t**(-gamma_0 - i) h_i(lam, z)

and each ``h_i`` is stored through its angular profile
``g_i(phi) = h_i(cos phi, sin phi)``.  The profiles are recovered ray by ray
from a least-squares fit in ``1/r`` on a geometric radius ladder and then
interpolated in the angle.

The module also carries the closed-form half-line kernels used as model
problems near a boundary point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad

from .config import parallel_map
from .homog import HomogeneousFunction


class PhgError(ArithmeticError):
    """Raised when an expansion cannot be extracted to the requested accuracy."""


# --------------------------------------------------------------------------
# model kernels on the half line


@dataclass(frozen=True)
class KernelParams:
    mu: float
    theta: float = 0.0
    j: int = 1
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("kernel parameter mu must be positive")
        if not 0.0 <= self.theta < math.pi:
            raise ValueError("theta must lie in [0, pi)")
        if int(self.j) != self.j or self.j < 1:
            raise ValueError("convolution power j must be a positive integer")
        if self.x < 0 or self.y < 0:
            raise ValueError("kernel points must be nonnegative")


def kernel_C(mu: float, theta: float) -> float:
    """Reflection coefficient ``(mu sin t + cos t) / (mu sin t - cos t)``."""
    num = mu * math.sin(theta) + math.cos(theta)
    den = mu * math.sin(theta) - math.cos(theta)
    if abs(den) <= 1e-14 * max(1.0, abs(num)):
        raise ZeroDivisionError(f"C(mu, theta) has a pole at mu = {mu}, theta = {theta}")
    return num / den


def _k_real_power(j: int, r: float, mu: float) -> float:
    # kernel of (l + mu^2)^-j on the line, from the (1/mu d/dmu)^(j-1) identity
    total = math.fsum(math.factorial(2 * j - 2 - k) / (math.factorial(k) * math.factorial(j - 1 - k))
                      * (2.0 * mu * r) ** k for k in range(j))
    return total * math.exp(-mu * r) / (math.factorial(j - 1) * 2.0 ** (2 * j - 1) * mu ** (2 * j - 1))


def kernel_eval(kind: str, p: KernelParams) -> float:
    """Evaluate one of ``K_theta``, ``K_R``, ``K_plus`` or ``K_R_power``."""
    mu = p.mu
    if kind == "K_R":
        return math.exp(-mu * abs(p.x - p.y)) / (2.0 * mu)
    if kind == "K_plus":
        return kernel_C(mu, p.theta) * math.exp(-mu * (p.x + p.y)) / (2.0 * mu)
    if kind == "K_theta":
        c = kernel_C(mu, p.theta)
        return (math.exp(-mu * abs(p.x - p.y)) + c * math.exp(-mu * (p.x + p.y))) / (2.0 * mu)
    if kind == "K_R_power":
        return _k_real_power(int(p.j), abs(p.x - p.y), mu)
    raise ValueError(f"unknown kernel {kind!r}")


# --------------------------------------------------------------------------
# expansion data


@dataclass
class HomogeneousCoefficient:
    """``h_i(lam, z) = r**-gamma g_i(phi)`` with ``(lam, z) = r (cos phi, sin phi)``."""

    index: int
    gamma: float
    phi: np.ndarray
    g: np.ndarray
    residual: float = 0.0
    interp_error: float = 0.0
    _series: Chebyshev | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self._series is None:
            dom = [float(self.phi.min()), float(self.phi.max())]
            self._series = Chebyshev.fit(self.phi, self.g, len(self.phi) - 1, domain=dom)
            coef = self._series.coef
            tail = float(np.max(np.abs(coef[-2:]))) if len(coef) > 2 else 0.0
            self.interp_error = max(self.interp_error, tail)

    @property
    def degree(self) -> float:
        return -self.gamma

    def profile(self, phi, derivative: int = 0):
        s = self._series.deriv(derivative) if derivative else self._series
        return s(np.asarray(phi, dtype=float))

    def __call__(self, lam, z):
        lam, z = np.asarray(lam), np.asarray(z)
        if np.iscomplexobj(lam) or np.iscomplexobj(z):
            # analytic continuation for contour sampling; the profile is a polynomial
            lam, z = np.broadcast_arrays(lam.astype(complex), z.astype(complex))
            with np.errstate(divide="ignore", invalid="ignore"):
                phi = np.where(np.abs(lam) >= np.abs(z), np.arctan(z / lam),
                               0.5 * np.pi - np.arctan(lam / z))
            return (lam * lam + z * z) ** (-0.5 * self.gamma) * self._series(phi)
        lam, z = lam.astype(float), z.astype(float)
        r = np.hypot(lam, z)
        return r ** -self.gamma * self.profile(np.arctan2(z, lam))

    def d_lambda(self, lam, z):
        """Radial plus angular chain rule on the interpolated profile."""
        lam, z = np.asarray(lam, dtype=float), np.asarray(z, dtype=float)
        r = np.hypot(lam, z)
        phi = np.arctan2(z, lam)
        g, dg = self.profile(phi), self.profile(phi, 1)
        return r ** (-self.gamma - 1) * (-self.gamma * np.cos(phi) * g - np.sin(phi) * dg)

    def d_z(self, lam, z):
        lam, z = np.asarray(lam, dtype=float), np.asarray(z, dtype=float)
        r = np.hypot(lam, z)
        phi = np.arctan2(z, lam)
        g, dg = self.profile(phi), self.profile(phi, 1)
        return r ** (-self.gamma - 1) * (-self.gamma * np.sin(phi) * g + np.cos(phi) * dg)

    def as_homogeneous(self, order: str = "zl") -> HomogeneousFunction:
        """The coefficient as a :class:`HomogeneousFunction` of ``(z, lam)`` or ``(lam, z)``."""
        if order == "zl":
            fn = lambda z, lam: self(lam, z)
        elif order == "lz":
            fn = lambda lam, z: self(lam, z)
        else:
            raise ValueError("order must be 'zl' or 'lz'")
        return HomogeneousFunction(fn, -self.gamma, name=f"h{self.index}")

    def as_dict(self) -> dict:
        return {"i": self.index, "gamma": self.gamma, "phi": self.phi.tolist(),
                "g": self.g.tolist(), "residual": self.residual}


@dataclass
class PhgExpansion:
    coefficients: list[HomogeneousCoefficient]
    remainder_order: float
    provenance: dict = field(default_factory=dict)
    holdout_error: float = 0.0

    def __post_init__(self):
        gam = [c.gamma for c in self.coefficients]
        if any(abs(b - a - 1.0) > 1e-12 for a, b in zip(gam, gam[1:])):
            raise ValueError("expansion degrees must decrease by exactly one")

    def __len__(self) -> int:
        return len(self.coefficients)

    def __getitem__(self, i: int) -> HomogeneousCoefficient:
        return self.coefficients[i]

    def __call__(self, lam, z, terms: int | None = None):
        use = self.coefficients if terms is None else self.coefficients[:terms]
        return sum(c(lam, z) for c in use)

    def profiles_json(self) -> list[dict]:
        return [c.as_dict() for c in self.coefficients]


# --------------------------------------------------------------------------
# extraction


def ray_angles(count: int = 16, eps: float = 0.02) -> np.ndarray:
    """Chebyshev points of the first kind on ``[eps, pi/2 - eps]``, increasing."""
    k = np.arange(count)
    t = -np.cos((2 * k + 1) * math.pi / (2 * count))
    return eps + (0.5 * math.pi - 2 * eps) * 0.5 * (t + 1.0)


def _ray_fit(values, radii, gamma0, K):
    # scaling by r^gamma0 leaves a polynomial in 1/r; columns are equilibrated
    b = values * radii**gamma0
    A = np.power.outer(1.0 / radii, np.arange(K + 1))
    norms = np.linalg.norm(A, axis=0)
    sol, *_ = np.linalg.lstsq(A / norms, b, rcond=None)
    coef = sol / norms
    resid = float(np.max(np.abs(A @ coef - b)) / max(np.max(np.abs(b)), 1e-300))
    return coef, resid


def extract_phg(trace: Callable[[float, float], float], K: int = 2, gamma0: float = 3.0, *,
                rays: int = 16, r0: float | None = None, M: int = 6, eps: float = 0.02,
                rtol: float = 1e-6, provenance: dict | None = None) -> PhgExpansion:
    """Fit ``sum_{i<=K} g_i(phi) r**(-gamma0-i)`` along rays and interpolate in ``phi``.

    ``trace(lam, z)`` must be defined for every ``r >= r0``.  A held-out radius
    between ladder points measures the truncation error of the assembled sum.
    The default ``r0`` is 8, stretched by ``trace.r_scale`` when the evaluator
    carries one (a small potential delays the asymptotic regime).
    """
    if r0 is None:
        r0 = 8.0 * max(1.0, float(getattr(trace, "r_scale", 1.0)))
    if M + 1 < K + 3:
        raise ValueError(f"K = {K} needs at least {K + 3} radii, the ladder has {M + 1}")
    phis = ray_angles(rays, eps)
    radii = r0 * 2.0 ** np.arange(M + 1)
    r_hold = r0 * 2.0**2.5

    def sample(phi):
        c, s = math.cos(phi), math.sin(phi)
        try:
            vals = np.array([trace(r * c, r * s) for r in radii], dtype=float)
            held = float(trace(r_hold * c, r_hold * s))
        except ArithmeticError as exc:
            raise PhgError(f"trace evaluation failed on ray phi = {phi:.4f}: {exc}") from exc
        return vals, held

    samples = parallel_map(sample, phis)
    G = np.empty((K + 1, rays))
    resid = np.empty(rays)
    held = np.empty(rays)
    for n, (vals, h) in enumerate(samples):
        if not np.all(np.isfinite(vals)):
            raise PhgError(f"non-finite trace samples on ray phi = {phis[n]:.4f}")
        G[:, n], resid[n] = _ray_fit(vals, radii, gamma0, K)
        approx = sum(G[i, n] * r_hold ** (-gamma0 - i) for i in range(K + 1))
        held[n] = abs(approx - h) / max(abs(h), 1e-300)
    worst = float(resid.max())
    if worst > rtol:
        raise PhgError(f"ray fit residual {worst:.3g} above {rtol:g}; raise K or r0")
    coeffs = [HomogeneousCoefficient(i, gamma0 + i, phis, G[i], residual=worst)
              for i in range(K + 1)]
    prov = {"gamma0": gamma0, "K": K, "rays": rays, "r0": r0, "M": M}
    prov.update(provenance or {})
    return PhgExpansion(coeffs, gamma0 + K + 1, prov, float(held.max()))


def coeff_slice(e: PhgExpansion, i: int, z: float, d_lambda: int = 0, *,
                tol: float = 1e-6, fd_tol: float = 1e-4) -> float:
    """``h_i(1, z)`` or ``d_lam h_i(1, z)`` from the stored profile."""
    if not 0 <= i < len(e):
        raise IndexError(f"expansion has orders 0..{len(e) - 1}, asked for {i}")
    c = e[i]
    if c.interp_error > tol * max(1.0, float(np.max(np.abs(c.g)))):
        raise PhgError(f"profile {i} interpolation error {c.interp_error:.3g} above tolerance")
    if d_lambda == 0:
        return float(c(1.0, z))
    if d_lambda != 1:
        raise ValueError("d_lambda must be 0 or 1")
    val = float(c.d_lambda(1.0, z))
    h = 1e-5
    fd = float(c(1.0 + h, z) - c(1.0 - h, z)) / (2 * h)
    if abs(fd - val) > fd_tol * max(1.0, abs(val)):
        raise PhgError(f"d_lambda slice disagrees with finite difference ({val} vs {fd})")
    return val


def sl_trace(V, W=0.0, bc0="d", bc1="d", *, power: int = 2, d_lambda: int = 0,
             d_z: int = 0) -> Callable[[float, float], float]:
    """``(lam, z) -> d_lam^a d_z^b Tr (Delta_lam + z^2)^-power`` for one family."""
    from .sturm import SLOperator, resolvent_trace

    base = SLOperator(V, W, 0.0, bc0, bc1)

    def trace(lam, z):
        return resolvent_trace(base.with_lambda(float(lam)), float(z), power, d_lambda, d_z)

    v_min = float(np.min(base.with_lambda(1.0).potential(np.linspace(0.0, 1.0, 201))
                         - base.potential(np.linspace(0.0, 1.0, 201))))
    trace.r_scale = 1.0 / math.sqrt(v_min)
    return trace


def interior_h0(V, lam: float, z: float) -> float:
    """``int_0^1 dx / (4 (lam^2 V + z^2)^(3/2))``: the leading coefficient of ``Tr^-2``."""
    Vf = V if callable(V) else (lambda x, c=float(V): c)
    xs = np.linspace(0.0, 1.0, 201)
    q_min = min(lam * lam * float(Vf(x)) + z * z for x in xs)
    if not q_min > 0:
        raise ValueError("lam^2 V + z^2 must be positive on [0, 1]")
    val, err = quad(lambda x: 0.25 * (lam * lam * Vf(x) + z * z) ** -1.5, 0.0, 1.0,
                    epsabs=1e-14, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise PhgError(f"interior quadrature failed (error estimate {err:.3g})")
    return float(val)
