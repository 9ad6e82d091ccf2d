"""OTOC measurement protocols for a thermal XXZ chain, checked against exact dense-matrix values."""

__version__ = "0.1.0"
