"""Annotation sidecar: raw text in, corpus-schema annotations out."""

__version__ = "0.1.0"
