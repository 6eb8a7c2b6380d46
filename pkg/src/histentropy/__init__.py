"""Information-entropy of decoherence functions in generalised history quantum theory."""

__version__ = "0.1.0"
