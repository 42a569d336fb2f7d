"""Numerical core: special functions, waiting-time laws, samplers and solvers."""
