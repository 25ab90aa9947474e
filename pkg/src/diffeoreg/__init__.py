"""Parametric diffeomorphic registration in bounded 2-D domains."""

__version__ = "0.1.0"
