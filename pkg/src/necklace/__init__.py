"""Constrained necklace splitting: exact solvers, configuration-space
complexes, homology over F_p and envy-free test-map machinery."""

__version__ = "0.1.0"
