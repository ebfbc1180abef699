"""Bidirectional compiler between ReLU networks on the unit cube and
Lukasiewicz-logic formulae represented as substitution graphs."""

__version__ = "0.1.0"
