"""Soft-hard multi-objective Bayesian optimization with robust sparsification."""

__version__ = "0.1.0"
