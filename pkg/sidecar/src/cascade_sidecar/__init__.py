"""Classifier sidecar: nearest-category search over a reference snippet
codebase plus optional validation, served over newline-delimited JSON."""

__version__ = "0.1.0"
