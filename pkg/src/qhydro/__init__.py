"""Boundary-driven lattice gases, their quantum Lindblad extensions, hydrodynamic
limits and steady-state fluctuations."""

__version__ = "0.1.0"
