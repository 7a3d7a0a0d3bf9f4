"""Deprecated-API refactoring synthesis guided by doc-comment code hints."""

__version__ = "0.1.0"
