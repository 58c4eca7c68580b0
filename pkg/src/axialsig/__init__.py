"""Signature coefficients of axial-linear curves and inversion back to the curve."""
