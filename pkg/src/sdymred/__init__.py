"""Residual-based verification of integrable reductions: surfaces and moving
frames, 1+1 and 2+1 zero-curvature systems, self-dual Yang-Mills and its
Bogomolny reduction, with pseudo-spectral solvers for the evolution equations."""

__version__ = "0.1.0"
