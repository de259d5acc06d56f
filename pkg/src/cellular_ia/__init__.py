"""Interference alignment and decoding for sectored hexagonal cellular networks."""

__version__ = "0.1.0"
