"""Collaborative prompt-engineering workbench for tutoring hint pathways."""

__version__ = "0.1.0"
