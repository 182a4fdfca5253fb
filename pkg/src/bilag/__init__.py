"""Numerical verification of bi-Lagrangian structures, their lifts, and Cherry flows on the torus."""

__version__ = "0.1.0"
