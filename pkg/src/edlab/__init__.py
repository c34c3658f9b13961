"""Discrepancy of coordinate-wise toral rotations for convex bodies: direct counts,
Fourier ladders, lattice-space limit laws and experiment plumbing."""

__version__ = "0.1.0"
