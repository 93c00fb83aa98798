"""Simulator and analysis toolchain for probability transport on a qubit's state space."""

__version__ = "0.1.0"
