"""Grossman-Larson forest algebra, free generator bases, and the
branched/geometric rough-path correspondence."""

__version__ = "0.1.0"
