"""Top-K ranking metrics with binary relevance."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

METRICS = ("Pre", "Rec", "nDCG")


def _hits(recommended, test, K: int) -> np.ndarray:
    if K < 1:
        raise ValueError("K must be >= 1")
    top = np.asarray(recommended)[:K]
    return np.isin(top, np.asarray(list(test) if isinstance(test, (set, frozenset)) else test))


def precision_at_k(recommended, test, K: int) -> float:
    """Hits in the top K divided by K, even when fewer than K items were recommended."""
    return float(_hits(recommended, test, K).sum()) / K


def recall_at_k(recommended, test, K: int) -> float:
    n_test = len(test)
    if n_test == 0:
        raise ValueError("recall is undefined for an empty test set")
    return float(_hits(recommended, test, K).sum()) / n_test


def ndcg_at_k(recommended, test, K: int) -> float:
    n_test = len(test)
    if n_test == 0:
        raise ValueError("nDCG is undefined for an empty test set")
    rel = _hits(recommended, test, K).astype(np.float64)
    discounts = 1.0 / np.log2(np.arange(2, K + 2))
    dcg = float(np.dot(2.0 ** rel - 1.0, discounts[:len(rel)]))
    idcg = float(discounts[:min(K, n_test)].sum())
    return dcg / idcg


METRIC_FUNCS = {"Pre": precision_at_k, "Rec": recall_at_k, "nDCG": ndcg_at_k}


@dataclass(frozen=True)
class MetricResult:
    model: str
    metric: str
    K: int
    users: np.ndarray
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if len(self.values) else float("nan")

    @property
    def stderr(self) -> float:
        n = len(self.values)
        return float(np.std(self.values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def evaluate_lists(model: str, lists, test_sets, metrics=METRICS, Ks=(10, 20)):
    """Per-user metric values for every (metric, K).

    ``lists`` maps user -> ranked POI array, ``test_sets`` user -> set of test
    POIs.  Users with an empty test set are left out.
    """
    users = np.array(sorted(u for u in lists if len(test_sets.get(u, ())) > 0), dtype=np.int64)
    skipped = len(lists) - len(users)
    if skipped:
        log.info("%s: %d users without test POIs excluded", model, skipped)
    out = {}
    for metric in metrics:
        f = METRIC_FUNCS[metric]
        for K in Ks:
            vals = np.array([f(lists[u], test_sets[u], K) for u in users], dtype=np.float64)
            out[(metric, K)] = MetricResult(model, metric, K, users, vals)
    return out
