"""Numerical laboratory for multilinear Strichartz and spectral projector bounds
on products of spheres and tori."""

__version__ = "0.1.0"
