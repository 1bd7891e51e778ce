"""Extremal linkage networks: layered graphs where every node links to the
fittest node inside a fitness-sized window on the next layer."""

__version__ = "0.1.0"
