"""Numerical laboratory for cube averages, multiple ergodic averages and Host-Kra seminorms."""

__version__ = "0.1.0"
