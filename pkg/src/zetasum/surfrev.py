"""Surfaces of revolution ``dx^2 + r(x)^2 dtheta^2`` over ``[0, 1]``.

Fourier modes ``e^{i lam theta}`` together with ``f = sqrt(r) u`` turn the
Laplacian into the family ``-d^2/dx^2 + lam^2 V + W`` with

    V = 1 / r^2,    W = r'' / (2 r) - (r' / (2 r))^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomp import OperatorFamily
from .expr import Node, derive_expression, is_constant, parse_expression
from .sturm import BoundaryCondition


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceProfile:
    r: Node
    dr: Node
    ddr: Node
    text: str

    @classmethod
    def from_text(cls, text: str, *, check_points: int = 1001) -> "SurfaceProfile":
        r = parse_expression(text)
        dr = derive_expression(r)
        prof = cls(r, dr, derive_expression(dr), text)
        xs = np.linspace(0.0, 1.0, check_points)
        vals = np.broadcast_to(r(xs), xs.shape)
        if not np.all(np.isfinite(vals)) or np.min(vals) <= 0.0:
            raise ProfileError(f"r = {text} must stay positive on [0, 1] "
                               f"(min {np.min(vals):.6g})")
        return prof

    def V(self, x):
        return 1.0 / self.r(x) ** 2

    def W(self, x):
        r, dr, ddr = self.r(x), self.dr(x), self.ddr(x)
        return ddr / (2.0 * r) - (dr / (2.0 * r)) ** 2

    @property
    def is_cylinder(self) -> bool:
        return is_constant(self.r)


def _surface_bc(bc, dr_over_r: float) -> BoundaryCondition:
    """Neumann for ``u`` becomes ``f' - (r'/2r) f = 0`` for ``f = sqrt(r) u``."""
    bc = BoundaryCondition.parse(bc)
    if bc.is_dirichlet or bc.name != "neumann":
        return bc
    k = 0.5 * dr_over_r
    if k == 0.0:
        return bc
    # cos t f + sin t f' = 0 with cot t = -k
    return BoundaryCondition(math.atan2(1.0, -k))


def decompose(profile: SurfaceProfile | str, bc0="d", bc1="d", *,
              surface_neumann: bool = False) -> OperatorFamily:
    """Operator family of the surface; boundary conditions pass through as given.

    With ``surface_neumann=True`` a Neumann condition is read as Neumann for the
    surface Laplacian and converted to the matching Robin condition.
    """
    if isinstance(profile, str):
        profile = SurfaceProfile.from_text(profile)
    if profile.is_cylinder:
        c = float(profile.r(0.0))
        V, W = 1.0 / c**2, 0.0
    else:
        V, W = profile.V, profile.W
    if surface_neumann:
        bc0 = _surface_bc(bc0, float(profile.dr(0.0) / profile.r(0.0)))
        bc1 = _surface_bc(bc1, float(profile.dr(1.0) / profile.r(1.0)))
    return OperatorFamily(V, W, bc0, bc1, name=f"r = {profile.text}")
