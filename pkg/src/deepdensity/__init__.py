"""Learned density estimation from k-nearest-neighbour distance features."""

__version__ = "0.1.0"
