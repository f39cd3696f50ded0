"""Discrete transparent boundary conditions for the leap-frog transport scheme."""

__version__ = "0.1.0"
