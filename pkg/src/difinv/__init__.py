"""Differential invariants of one-parameter groups of local transformations."""

__version__ = "0.1.0"
