"""Numerical toolkit for contact diffeomorphisms of the three-torus."""

__version__ = "0.1.0"
