"""Exact symbolic verification of quantum vertex algebra constructions."""

__version__ = "0.1.0"
