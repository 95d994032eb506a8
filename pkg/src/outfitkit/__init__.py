"""Outfit recommendation toolkit: catalog queries, history filtering,
dialogue dataset construction, evaluation metrics, and a tool-calling
assistant service."""

__version__ = "0.1.0"
