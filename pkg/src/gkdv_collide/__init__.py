"""Numerical construction and collision measurements for gKdV two-solitons."""

__version__ = "0.1.0"
