"""Multi-scale, multi-modal transformer summarization of source code."""

__version__ = "0.1.0"
