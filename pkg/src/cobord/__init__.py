"""Finite-truncation computations of equivariant complex cobordism coefficients."""

__version__ = "0.1.0"
