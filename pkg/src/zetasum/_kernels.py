"""Compiled Pruefer integrator with first and second parameter variations.

The solution of ``y'' = Q y`` with ``Q = lam**2 V + W + E`` is written as
``y = exp(l) sin(psi) / sqrt(k)``, ``y' = exp(l) sqrt(k) cos(psi)`` where the
scale ``k(x) = ((lr**2 V + Er)**2 + 1)**0.25`` uses frozen reference values
``lr``, ``Er`` of the parameters.  Because ``k`` does not move with ``(lam, E)``
the variational equations only see ``Q``.

State layout: psi, l, psi_E, l_E, psi_EE, l_EE, psi_L, l_L, psi_EL, l_EL.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

NSTATE = 10


def magnitude_floor(k: float, lam: float) -> np.ndarray:
    """Typical sizes of the state components for a local scale ``k``."""
    k = max(float(k), 1.0)
    lam = max(abs(float(lam)), 1e-3)
    return 1e-3 * np.array([1.0, 1.0, k**-2, k**-1, k**-4, k**-3,
                            lam * k**-2, lam * k**-1, lam * k**-4, lam * k**-3])


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9
_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                22.0 / 525, -1.0 / 40)


@njit(cache=True, nogil=True)
def cheb_eval(c, x):
    """Clenshaw evaluation of a Chebyshev series on ``[0, 1]``."""
    t = 2.0 * x - 1.0
    b1 = 0.0
    b2 = 0.0
    for j in range(c.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * t * b1 - b2 + c[j], b1
    return t * b1 - b2 + c[0]


@njit(cache=True, nogil=True)
def scale_k(cv, x, lr, er):
    p = lr * lr * cheb_eval(cv, x) + er
    return (p * p + 1.0) ** 0.25


@njit(cache=True, nogil=True)
def _rhs(x, s, out, cv, cdv, cw, lam, e, lr, er):
    v = cheb_eval(cv, x)
    w = cheb_eval(cw, x)
    p = lr * lr * v + er
    k = (p * p + 1.0) ** 0.25
    kap = 0.5 * p * lr * lr * cheb_eval(cdv, x) / (p * p + 1.0)
    q = lam * lam * v + w + e
    psi = s[0]
    sn = math.sin(psi)
    cs = math.cos(psi)
    s2 = 2.0 * sn * cs
    c2 = cs * cs - sn * sn
    g = k + q / k
    a_p = -g * s2 + kap * c2
    a_pp = -2.0 * g * c2 - 2.0 * kap * s2
    a_q = -sn * sn / k
    a_pq = -s2 / k
    b_p = g * c2 + kap * s2
    b_pp = -2.0 * g * s2 + 2.0 * kap * c2
    b_q = 0.5 * s2 / k
    b_pq = c2 / k
    q_l = 2.0 * lam * v
    out[0] = k * cs * cs - (q / k) * sn * sn + kap * sn * cs
    out[1] = 0.5 * g * s2 - 0.5 * kap * c2
    pe = s[2]
    out[2] = a_p * pe + a_q
    out[3] = b_p * pe + b_q
    out[4] = a_p * s[4] + a_pp * pe * pe + 2.0 * a_pq * pe
    out[5] = b_p * s[4] + b_pp * pe * pe + 2.0 * b_pq * pe
    pl = s[6]
    out[6] = a_p * pl + a_q * q_l
    out[7] = b_p * pl + b_q * q_l
    out[8] = a_p * s[8] + a_pp * pe * pl + a_pq * (pe * q_l + pl)
    out[9] = b_p * s[8] + b_pp * pe * pl + b_pq * (pe * q_l + pl)


@njit(cache=True, nogil=True)
def integrate(s0, x0, x1, cv, cdv, cw, lam, e, lr, er, rtol, floor, ncomp, max_steps):
    """Adaptive DP5(4) from ``x0`` to ``x1`` (either direction).

    Only the first ``ncomp`` components enter the error norm; ``floor``
    holds a magnitude per component below which errors are measured
    absolutely (variations start at zero).  Returns the
    final state and the number of accepted steps (negative on failure).
    """
    n = s0.shape[0]
    s = s0.copy()
    direction = 1.0 if x1 >= x0 else -1.0
    length = abs(x1 - x0)
    if length == 0.0:
        return s, 0
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    new = np.empty(n)
    peak = np.abs(s)
    kk = scale_k(cv, x0, lr, er)
    qq = abs(lam * lam * cheb_eval(cv, x0) + cheb_eval(cw, x0) + e) / kk
    h = min(length, 0.1 / (kk + qq + 1.0))
    x = x0
    _rhs(x, s, k1, cv, cdv, cw, lam, e, lr, er)
    steps = 0
    tries = 0
    while True:
        remaining = length - abs(x - x0)
        if remaining <= 1e-15 * length:
            break
        if h > remaining:
            h = remaining
        hd = h * direction
        for i in range(n):
            tmp[i] = s[i] + hd * _A21 * k1[i]
        _rhs(x + _C2 * hd, tmp, k2, cv, cdv, cw, lam, e, lr, er)
        for i in range(n):
            tmp[i] = s[i] + hd * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(x + _C3 * hd, tmp, k3, cv, cdv, cw, lam, e, lr, er)
        for i in range(n):
            tmp[i] = s[i] + hd * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(x + _C4 * hd, tmp, k4, cv, cdv, cw, lam, e, lr, er)
        for i in range(n):
            tmp[i] = s[i] + hd * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(x + _C5 * hd, tmp, k5, cv, cdv, cw, lam, e, lr, er)
        for i in range(n):
            tmp[i] = s[i] + hd * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                                  + _A65 * k5[i])
        _rhs(x + hd, tmp, k6, cv, cdv, cw, lam, e, lr, er)
        for i in range(n):
            new[i] = s[i] + hd * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i]
                                  + _B6 * k6[i])
        _rhs(x + hd, new, k7, cv, cdv, cw, lam, e, lr, er)
        err = 0.0
        for i in range(ncomp):
            d = hd * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i]
                      + _E7 * k7[i])
            big = max(peak[i], abs(new[i]), floor[i])
            sc = rtol * big + 1e-300
            r = d / sc
            err += r * r
        err = math.sqrt(err / ncomp)
        tries += 1
        if tries > max_steps:
            return s, -1
        if err <= 1.0:
            x = x + hd
            for i in range(n):
                s[i] = new[i]
                k1[i] = k7[i]
                if abs(new[i]) > peak[i]:
                    peak[i] = abs(new[i])
            steps += 1
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h = h * fac
    return s, steps
