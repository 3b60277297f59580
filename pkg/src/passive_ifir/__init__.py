"""Passivity-certified iFIR controllers designed from open-loop data."""

__version__ = "0.1.0"
