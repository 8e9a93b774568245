"""Potential landscape, centre manifold and metastable transitions of a ring of coupled bistable diffusions."""

__version__ = "0.1.0"
