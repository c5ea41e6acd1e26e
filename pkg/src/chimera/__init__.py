"""Glider wing design toolkit: vortex-lattice aerodynamics, stability
analysis, neural surrogates, and a five-strategy design optimizer."""

__version__ = "0.1.0"
