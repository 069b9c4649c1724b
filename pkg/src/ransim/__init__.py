"""Deterministic system-level simulator for multi-AIV radio resource management."""

__version__ = "0.1.0"
