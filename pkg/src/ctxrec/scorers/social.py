"""Social influence: friends' check-in power law, and friend-based CF."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ..data import FrequencyMatrix, SocialGraph
from ..serialization import decode_sparse, encode_sparse, register
from .base import ContextScore, as_pois, check_index, power_law_cdf, power_law_exponent


def social_frequency(R: FrequencyMatrix, S: SocialGraph) -> sp.csr_matrix:
    """``x[u, l]``: total check-ins of ``u``'s friends at ``l``."""
    x = (S.adjacency @ R.csr.astype(np.float64)).tocsr()
    x.sort_indices()
    return x


def estimate_beta(R: FrequencyMatrix, S: SocialGraph) -> Optional[float]:
    """Power-law exponent of social check-in frequencies; ``None`` if all are zero."""
    n_users, n_pois = R.shape
    if n_users < 1 or n_pois < 1:
        raise ValueError("need at least one user and one POI")
    x = social_frequency(R, S)
    log_sum = math.fsum(np.log1p(x.data))
    return power_law_exponent(log_sum, n_users * n_pois)


@register
@dataclass(frozen=True, eq=False)
class SocialPowerLawModel:
    beta: Optional[float]
    x: sp.csr_matrix

    @property
    def degenerate(self) -> bool:
        return self.beta is None

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.x.shape[0], "user")
        pois = as_pois(pois, self.x.shape[1])
        row = np.asarray(self.x[u].todense()).ravel()[pois]
        return power_law_cdf(row, self.beta)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "x": encode_sparse(self.x)}

    @classmethod
    def from_dict(cls, d: dict) -> "SocialPowerLawModel":
        return cls(d["beta"], decode_sparse(d["x"]))


def fit_social(R: FrequencyMatrix, S: SocialGraph) -> SocialPowerLawModel:
    return SocialPowerLawModel(estimate_beta(R, S), social_frequency(R, S))


def social_score(m: SocialPowerLawModel, u: int, l: int) -> ContextScore:
    l = check_index(l, m.x.shape[1], "POI")
    return ContextScore(float(m.scores(u, [l])[0]), "S")


@register
@dataclass(frozen=True, eq=False)
class FcfModel:
    """Friend-based collaborative filtering with cosine-weighted friends."""

    R: sp.csr_matrix
    adjacency: sp.csr_matrix

    @property
    def n_users(self) -> int:
        return self.R.shape[0]

    def similarity(self, u: int, f: int) -> float:
        a = np.asarray(self.R[u].todense()).ravel()
        b = np.asarray(self.R[f].todense()).ravel()
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(np.dot(a, b) / (na * nb))

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.n_users, "user")
        pois = as_pois(pois, self.R.shape[1])
        friends = self.adjacency.indices[self.adjacency.indptr[u]:self.adjacency.indptr[u + 1]]
        if len(friends) == 0:
            return np.zeros(len(pois))
        Rf = self.R[friends]
        ru = np.asarray(self.R[u].todense()).ravel()
        norms = np.sqrt(np.asarray(Rf.multiply(Rf).sum(axis=1)).ravel())
        nu = np.linalg.norm(ru)
        dots = Rf @ ru
        with np.errstate(invalid="ignore", divide="ignore"):
            sims = np.where((norms > 0) & (nu > 0), dots / (norms * nu), 0.0)
        total = sims.sum()
        if total <= 0.0:
            return np.zeros(len(pois))
        return np.asarray(Rf[:, pois].T @ sims).ravel() / total

    def to_dict(self) -> dict:
        return {"R": encode_sparse(self.R), "adjacency": encode_sparse(self.adjacency)}

    @classmethod
    def from_dict(cls, d: dict) -> "FcfModel":
        return cls(decode_sparse(d["R"]), decode_sparse(d["adjacency"]))


def fit_fcf(R: FrequencyMatrix, S: SocialGraph) -> FcfModel:
    return FcfModel(R.csr.astype(np.float64).tocsr(), S.adjacency)


def fcf_score(R: FrequencyMatrix, S: SocialGraph, u: int, l: int) -> ContextScore:
    m = fit_fcf(R, S)
    l = check_index(l, R.shape[1], "POI")
    return ContextScore(float(m.scores(u, [l])[0]), "FCF")
