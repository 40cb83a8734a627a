"""Effective master equations for driven, weakly anharmonic circuits."""

__version__ = "0.1.0"
