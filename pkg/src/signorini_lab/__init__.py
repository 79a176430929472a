"""Numerical laboratory for the thin obstacle problem."""

__version__ = "0.1.0"
