"""Optimal alignment scores of m random words: exact solver and Monte Carlo checks."""

__version__ = "0.1.0"
