"""Context-aware POI recommendation: scorers, rankers, sum-rule fusion and evaluation."""

__version__ = "0.1.0"
