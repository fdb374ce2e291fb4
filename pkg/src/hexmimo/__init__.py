"""Spectral-efficiency analysis and optimization for massive MIMO on hexagonal grids."""

__version__ = "0.1.0"
