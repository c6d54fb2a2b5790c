"""Simulator for three-party key distribution over GHZ triplets."""

__version__ = "0.1.0"
