"""Boundary measurement matrices of networks on a cylinder, rank 2 and 3."""
