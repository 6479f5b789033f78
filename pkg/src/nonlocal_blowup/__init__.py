"""Numerical laboratory for a reaction-diffusion equation with a nonlocal
source and a nonlocal boundary condition."""

__version__ = "0.1.0"
