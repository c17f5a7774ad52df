"""Weighted Bergman kernels, equilibrium envelopes and determinantal point processes."""

__version__ = "0.1.0"
