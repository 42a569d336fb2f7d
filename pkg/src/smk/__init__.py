"""Stepped semi-Markov processes and their fractional Kolmogorov equations."""

__version__ = "0.1.0"
