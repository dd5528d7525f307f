"""Monte Carlo and exact-enumeration laboratory for 2D Ising percolation near the critical field."""

__version__ = "0.1.0"
