"""Discourse probing pipeline: dataset synthesis, encoder training, evaluation."""

__version__ = "0.1.0"
