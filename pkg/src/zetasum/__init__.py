"""Regularized sums, integrals and zeta-determinants of 1D operator families."""

__version__ = "0.1.0"
