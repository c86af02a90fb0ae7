"""Learning convex subspaces of policies with K-shot test-time selection."""

__version__ = "0.1.0"
