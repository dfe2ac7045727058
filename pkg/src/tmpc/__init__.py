"""Fixed-point compilation and semi-honest 3-party secure inference over Z_{2^64}."""

__version__ = "0.1.0"
