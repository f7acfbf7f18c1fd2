"""Polymer inference toolkit: featurize monomer graphs, fit sparse linear
predictors, invert them with an exact MILP, and generate polymers meeting
a topological specification and property window."""

__version__ = "0.1.0"
