"""Aggregate utilities, saddle conjugates and scenario-tree stochastic fields."""

__version__ = "0.1.0"
