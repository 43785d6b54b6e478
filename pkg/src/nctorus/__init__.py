"""Numerical toolkit for the noncommutative 3-torus as a U(1) spectral bundle."""

__version__ = "0.1.0"
