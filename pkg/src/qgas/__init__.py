"""Collective-spin simulator for an ultra-cold-atom test of quantum-valued gravity."""

__version__ = "0.1.0"
