"""Categorical popularity power law."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ..data import Dataset, FrequencyMatrix
from ..serialization import decode_array, encode_array, register
from .base import ContextScore, as_pois, check_index, power_law_cdf, power_law_exponent


class ContextUnavailable(ValueError):
    """A context needs data the dataset does not provide."""


@register
@dataclass(frozen=True, eq=False)
class CategoricalModel:
    """``B`` is user x category visits, ``popularity`` all-user visits per POI.

    ``H[c, l]`` equals ``popularity[l]`` when ``l`` belongs to ``c`` and 0
    otherwise, so ``g[u, l] = B[u, category[l]] * popularity[l]``.
    """

    gamma: Optional[float]
    B: np.ndarray
    popularity: np.ndarray
    poi_category: np.ndarray

    @property
    def degenerate(self) -> bool:
        return self.gamma is None

    @property
    def H(self) -> np.ndarray:
        n_cat = self.B.shape[1]
        H = np.zeros((n_cat, len(self.popularity)))
        H[self.poi_category, np.arange(len(self.popularity))] = self.popularity
        return H

    def g(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.B.shape[0], "user")
        pois = as_pois(pois, len(self.popularity))
        return self.B[u, self.poi_category[pois]] * self.popularity[pois]

    def scores(self, u: int, pois=None) -> np.ndarray:
        return power_law_cdf(self.g(u, pois), self.gamma)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "B": encode_array(self.B),
                "popularity": encode_array(self.popularity),
                "poi_category": encode_array(self.poi_category)}

    @classmethod
    def from_dict(cls, d: dict) -> "CategoricalModel":
        return cls(d["gamma"], decode_array(d["B"]), decode_array(d["popularity"]),
                   decode_array(d["poi_category"]))


def fit_categorical(R: FrequencyMatrix, d: Dataset, chunk: int = 512) -> CategoricalModel:
    if not d.has_categories:
        raise ContextUnavailable("categorical context unavailable: dataset has no POI categories")
    n_users, n_pois = R.shape
    cat = np.asarray(d.poi_category, dtype=np.int64)
    onehot = sp.csr_matrix((np.ones(n_pois), (np.arange(n_pois), cat)), shape=(n_pois, d.n_categories))
    Rf = R.csr.astype(np.float64)
    B = np.asarray((Rf @ onehot).todense())
    popularity = np.asarray(Rf.sum(axis=0)).ravel()
    parts = []
    for lo in range(0, n_users, chunk):
        g = B[lo:lo + chunk][:, cat] * popularity
        parts.append(math.fsum(np.log1p(g).ravel()))
    gamma = power_law_exponent(math.fsum(parts), n_users * n_pois)
    return CategoricalModel(gamma, B, popularity, cat)


def categorical_score(m: CategoricalModel, u: int, l: int) -> ContextScore:
    l = check_index(l, len(m.popularity), "POI")
    return ContextScore(float(m.scores(u, [l])[0]), "C")
