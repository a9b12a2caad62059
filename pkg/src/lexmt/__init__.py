"""Lexicalist machine translation engine with toy English-to-Spanish lingware."""

__version__ = "0.1.0"
