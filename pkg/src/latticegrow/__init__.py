"""Simulation and verification tools for 1-D annihilation-creation chains
and 2-D diffusion-limited aggregation."""

__version__ = "0.1.0"
