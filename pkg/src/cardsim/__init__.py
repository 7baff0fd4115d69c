"""cardsim: compare open card-sort groupings with text-similarity models."""

__version__ = "0.1.0"
