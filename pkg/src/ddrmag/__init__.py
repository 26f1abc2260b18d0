"""Arbitrary-order discrete de Rham method for mixed magnetostatics."""

__version__ = "0.1.0"
