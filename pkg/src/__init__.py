"""Furstenberg lab - exact-arithmetic experiments on a minimal, non-uniquely ergodic skew product."""

__version__ = "0.3.0"
