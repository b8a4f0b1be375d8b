"""Radial solutions of quasilinear phi-Laplacian systems: solver, criteria functionals, classifier."""

__version__ = "0.1.0"
