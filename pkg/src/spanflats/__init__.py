"""Exact enumeration of flats spanned by finite point sets in RP^d."""

__version__ = "0.1.0"
