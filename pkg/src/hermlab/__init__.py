"""Harmonic-oscillator spectral toolkit for random-data NLS estimates."""

__version__ = "0.1.0"
