"""Cardinality-constraint reductions over expanders, with PC and SoS degree tools."""

__version__ = "0.1.0"
