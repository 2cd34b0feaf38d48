"""Additive Markov chain over a POI-to-POI transition graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..data import Dataset
from ..serialization import decode_array, decode_sparse, encode_array, encode_sparse, register
from .base import ContextScore, as_pois, check_index

DEFAULT_ALPHA = 0.1


@register
@dataclass(frozen=True, eq=False)
class AmcTransitionGraph:
    tcount: sp.csr_matrix
    ocount: np.ndarray
    alpha: float = DEFAULT_ALPHA

    @property
    def n_pois(self) -> int:
        return len(self.ocount)

    @property
    def transition_probs(self) -> sp.csr_matrix:
        inv = np.zeros(self.n_pois)
        nz = self.ocount > 0
        inv[nz] = 1.0 / self.ocount[nz]
        return (sp.diags(inv) @ self.tcount).tocsr()

    def history_weights(self, n: int) -> np.ndarray:
        """Decay weights of history positions 1..n; the latest visit weighs 1."""
        return 2.0 ** (-self.alpha * (n - np.arange(1, n + 1)))

    def scores(self, history, pois=None) -> np.ndarray:
        history = np.asarray(history, dtype=np.int64)
        if len(history) == 0:
            raise ValueError("empty check-in history")
        check_index(history.min(), self.n_pois, "POI")
        check_index(history.max(), self.n_pois, "POI")
        pois = as_pois(pois, self.n_pois)
        w = self.history_weights(len(history))
        per_poi = np.bincount(history, weights=w, minlength=self.n_pois)
        s = self.transition_probs.T @ per_poi
        return s[pois] / w.sum()

    def to_dict(self) -> dict:
        return {"tcount": encode_sparse(self.tcount), "ocount": encode_array(self.ocount),
                "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "AmcTransitionGraph":
        return cls(decode_sparse(d["tcount"]), decode_array(d["ocount"]), d["alpha"])


def build_transition_graph(train: Dataset, alpha: float = DEFAULT_ALPHA) -> AmcTransitionGraph:
    """Count transitions between chronologically consecutive check-ins of each user."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    same_user = train.users[1:] == train.users[:-1]
    src = train.pois[:-1][same_user]
    dst = train.pois[1:][same_user]
    n = train.n_pois
    t = sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    t.sum_duplicates()
    t.sort_indices()
    ocount = np.asarray(t.sum(axis=1)).ravel()
    return AmcTransitionGraph(t, ocount, float(alpha))


def amc_score(g: AmcTransitionGraph, history, l: int) -> ContextScore:
    l = check_index(l, g.n_pois, "POI")
    return ContextScore(float(g.scores(history, [l])[0]), "T")
