"""Numerical laboratory for Brownian motion penalized by ``exp(-1/2 int L^y_t V(dy))``."""
__version__ = "0.1.0"
