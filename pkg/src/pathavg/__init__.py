"""Randomized path averaging: gossip simulation on torus grids and random
geometric graphs, expected averaging matrices, and canonical-path bounds."""

__version__ = "0.1.0"
