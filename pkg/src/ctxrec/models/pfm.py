"""Poisson factor model with Gamma-shaped priors on non-negative factors.

The training target is the log-posterior

    sum_{k,i} (sigma_k - 1) ln(U_ki / rho_k) - U_ki / rho_k
  + sum_{k,j} (sigma_k - 1) ln(L_kj / rho_k) - L_kj / rho_k
  + sum_{i,j} R_ij ln (U^T L)_ij - (U^T L)_ij

which is maximised by projected gradient ascent.  Only the non-zero cells of
``R`` enter the log term, so the cost per iteration is O(K * (nnz + |U| + |L|)).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..data import FrequencyMatrix
from ..serialization import decode_array, encode_array, register
from ..scorers.base import check_index

log = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-8


@dataclass
class PfmParams:
    K: int = 30
    sigma: float = 2.0
    rho: float = 0.5
    learning_rate: float = 1e-3
    iterations: int = 300
    init_low: float = 0.01
    init_high: float = 0.1
    max_backtracks: int = 40


@register
@dataclass(frozen=True, eq=False)
class MfModel:
    U: np.ndarray
    L: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    learning_rate: float = 1e-3
    iterations: int = 300
    seed: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def K(self) -> int:
        return self.U.shape[0]

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.U.shape[1], "user")
        Lq = self.L if pois is None else self.L[:, np.asarray(pois, dtype=np.int64)]
        return self.U[:, u] @ Lq

    def to_dict(self) -> dict:
        return {"U": encode_array(self.U), "L": encode_array(self.L),
                "sigma": encode_array(self.sigma), "rho": encode_array(self.rho),
                "learning_rate": self.learning_rate, "iterations": self.iterations,
                "seed": self.seed, "trace": encode_array(self.trace)}

    @classmethod
    def from_dict(cls, d: dict) -> "MfModel":
        return cls(decode_array(d["U"]), decode_array(d["L"]), decode_array(d["sigma"]),
                   decode_array(d["rho"]), d["learning_rate"], d["iterations"], d["seed"],
                   decode_array(d["trace"]))


def _prep(R):
    if isinstance(R, FrequencyMatrix):
        R = R.csr
    R = sp.csr_matrix(R, dtype=np.float64)
    R.eliminate_zeros()
    coo = R.tocoo()
    return R.shape, coo.row, coo.col, coo.data


def _cell_products(U, L, rows, cols):
    return np.einsum("ki,ki->i", U[:, rows], L[:, cols])


def _prior(A, sigma, rho):
    return float(np.sum((sigma - 1.0)[:, None] * np.log(A / rho[:, None]) - A / rho[:, None]))


def pfm_objective(U, L, R, sigma, rho) -> float:
    """Log-posterior of the factors (additive constant dropped)."""
    shape, rows, cols, vals = _prep(R)
    sigma, rho = np.broadcast_to(sigma, U.shape[:1]), np.broadcast_to(rho, U.shape[:1])
    return _objective(U, L, rows, cols, vals, sigma, rho)


def _objective(U, L, rows, cols, vals, sigma, rho):
    # overflow shows up as a non-finite value, which the trainer reports itself
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = _cell_products(U, L, rows, cols)
        data = float(np.dot(vals, np.log(x)))
        total = float(U.sum(axis=1) @ L.sum(axis=1))
        return _prior(U, sigma, rho) + _prior(L, sigma, rho) + data - total


def pfm_gradient(U, L, R, sigma, rho):
    """Analytic gradient of :func:`pfm_objective` w.r.t. ``U`` and ``L``."""
    shape, rows, cols, vals = _prep(R)
    sigma, rho = np.broadcast_to(sigma, U.shape[:1]), np.broadcast_to(rho, U.shape[:1])
    return _gradient(U, L, shape, rows, cols, vals, sigma, rho)


def _gradient(U, L, shape, rows, cols, vals, sigma, rho):
    x = _cell_products(U, L, rows, cols)
    Z = sp.csr_matrix((vals / x, (rows, cols)), shape=shape)
    s1 = (sigma - 1.0)[:, None]
    r1 = (1.0 / rho)[:, None]
    gU = s1 / U - r1 + (Z @ L.T).T - L.sum(axis=1)[:, None]
    gL = s1 / L - r1 + (Z.T @ U.T).T - U.sum(axis=1)[:, None]
    return gU, gL


def train_pfm(R: FrequencyMatrix, params: PfmParams = PfmParams(), seed: int = 0) -> MfModel:
    """Projected gradient ascent with step halving whenever the objective would drop."""
    if params.K < 1:
        raise ValueError("K must be >= 1")
    if params.learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    shape, rows, cols, vals = _prep(R)
    if len(vals) == 0:
        raise ValueError("empty frequency matrix")
    K = params.K
    sigma = np.full(K, float(params.sigma))
    rho = np.full(K, float(params.rho))
    rng = np.random.default_rng(seed)
    U = rng.uniform(params.init_low, params.init_high, size=(K, shape[0]))
    L = rng.uniform(params.init_low, params.init_high, size=(K, shape[1]))
    F = _objective(U, L, rows, cols, vals, sigma, rho)
    if not np.isfinite(F):
        raise FloatingPointError("non-finite objective at iteration 0")
    trace = [F]
    step = params.learning_rate
    for it in range(1, params.iterations + 1):
        gU, gL = _gradient(U, L, shape, rows, cols, vals, sigma, rho)
        if not (np.all(np.isfinite(gU)) and np.all(np.isfinite(gL))):
            raise FloatingPointError(f"non-finite gradient at iteration {it}")
        step = min(params.learning_rate, 2.0 * step)
        for _ in range(params.max_backtracks):
            U2 = np.maximum(U + step * gU, POSITIVITY_FLOOR)
            L2 = np.maximum(L + step * gL, POSITIVITY_FLOOR)
            F2 = _objective(U2, L2, rows, cols, vals, sigma, rho)
            if np.isfinite(F2) and F2 >= F:
                U, L, F = U2, L2, F2
                break
            step *= 0.5
        else:
            log.info("line search exhausted at iteration %d; stopping", it)
            trace.append(F)
            break
        trace.append(F)
    return MfModel(U, L, sigma, rho, params.learning_rate, params.iterations, seed, np.array(trace))


def mf_predict(m: MfModel, u: int, l: int) -> float:
    l = check_index(l, m.L.shape[1], "POI")
    return float(m.scores(u, [l])[0])


def write_trace(trace, path, column: str = "objective") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", column])
        for i, v in enumerate(trace):
            w.writerow([i, repr(float(v))])
