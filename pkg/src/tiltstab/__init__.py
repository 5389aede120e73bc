"""Tilt stability of local minimizers for smooth inequality-constrained programs."""

__version__ = "0.1.0"
