"""capsmith: figure caption analysis, rating, and drafting toolkit."""

__version__ = "0.1.0"
