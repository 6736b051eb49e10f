"""Affine boomerang opinion dynamics on signed graphs."""

__version__ = "0.1.0"
