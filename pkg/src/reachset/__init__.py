"""Data-driven convex polygon estimates of probabilistic reachable sets."""

__version__ = "0.1.0"
