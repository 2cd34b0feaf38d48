from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONTEXT_TAGS = ("G", "GU", "T", "S", "C", "FCF", "MGM")


@dataclass(frozen=True)
class ContextScore:
    value: float
    context_tag: str

    def __post_init__(self):
        if self.context_tag not in CONTEXT_TAGS:
            raise ValueError(f"unknown context tag {self.context_tag!r}")
        if not (np.isfinite(self.value) and self.value >= 0.0):
            raise ValueError(f"context score must be finite and >= 0, got {self.value}")


def check_index(i, n: int, what: str) -> int:
    i = int(i)
    if not 0 <= i < n:
        raise IndexError(f"unknown {what} index {i} (registry has {n})")
    return i


def as_pois(pois, n_pois: int) -> np.ndarray:
    if pois is None:
        return np.arange(n_pois)
    pois = np.asarray(pois, dtype=np.int64)
    if len(pois) and (pois.min() < 0 or pois.max() >= n_pois):
        raise IndexError("unknown POI index in query")
    return pois


def power_law_exponent(log_sum: float, n_pairs: int):
    """``1 + n_pairs / log_sum``; ``None`` when the log-sum vanishes."""
    if log_sum <= 0.0:
        return None
    return 1.0 + n_pairs / log_sum


def power_law_cdf(x, exponent):
    """``1 - (1 + x)^(1 - exponent)``, identically 0 for a degenerate exponent."""
    x = np.asarray(x, dtype=np.float64)
    if exponent is None:
        return np.zeros_like(x)
    return -np.expm1((1.0 - exponent) * np.log1p(x))
