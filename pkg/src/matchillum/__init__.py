"""Matched illumination: LED channel weights that make a camera more colorimetric."""
__version__ = "0.1.0"
