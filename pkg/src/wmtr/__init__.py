"""Trace semantics and refinement checking for concurrent objects under
weak memory models (SC, TSO, and a relaxed non-multi-copy-atomic model)."""

__version__ = "0.1.0"
