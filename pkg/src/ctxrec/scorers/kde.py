"""Per-user bivariate Gaussian KDE over check-in locations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, FrequencyMatrix
from ..geo import equirectangular_km
from ..serialization import decode_array, encode_array, register
from .base import ContextScore, as_pois, check_index

BANDWIDTH_FLOOR_KM = 0.01


def silverman_bandwidth(sigma, n, floor=BANDWIDTH_FLOOR_KM):
    """Rule-of-thumb bandwidth ``1.06 * sigma * n**(-1/5)`` with a lower floor."""
    h = 1.06 * np.asarray(sigma, dtype=float) * np.asarray(n, dtype=float) ** (-0.2)
    return np.maximum(h, floor)


def gaussian_kernel_2d(dx, dy, hx, hy):
    """Product of two normal densities with standard deviations ``hx`` and ``hy``."""
    return np.exp(-0.5 * ((dx / hx) ** 2 + (dy / hy) ** 2)) / (2.0 * np.pi * hx * hy)


def weighted_std(v, w) -> float:
    """Unbiased std-dev under reliability weights; unchanged when ``w`` is rescaled.

    Zero when fewer than two distinct support points carry weight.
    """
    v, w = np.asarray(v, dtype=np.float64), np.asarray(w, dtype=np.float64)
    v1 = w.sum()
    if len(v) < 2 or v1 <= 0:
        return 0.0
    denom = v1 - np.dot(w, w) / v1
    if denom <= 0:
        return 0.0
    m = np.dot(w, v) / v1
    return float(np.sqrt(np.dot(w, (v - m) ** 2) / denom))


@register
@dataclass(frozen=True, eq=False)
class GeoKdeModel:
    """Support points of every user, projected to km about the user's mean location.

    ``offsets[u]:offsets[u+1]`` slices the support arrays of user ``u``.
    Bandwidths use the number of distinct support points as ``n``, so the
    scores do not move when all of a user's counts are scaled together.
    ``mode`` is ``"user"`` for per-user bandwidths or ``"universal"`` when a
    single bandwidth pair estimated from all users is shared.
    """

    poi_lat: np.ndarray
    poi_lon: np.ndarray
    origin_lat: np.ndarray
    origin_lon: np.ndarray
    offsets: np.ndarray
    support_x: np.ndarray
    support_y: np.ndarray
    weights: np.ndarray
    h_x: np.ndarray
    h_y: np.ndarray
    u_n: np.ndarray
    floored: np.ndarray
    mode: str = "user"

    @property
    def n_users(self) -> int:
        return len(self.u_n)

    @property
    def n_pois(self) -> int:
        return len(self.poi_lat)

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.n_users, "user")
        pois = as_pois(pois, self.n_pois)
        s = slice(self.offsets[u], self.offsets[u + 1])
        if self.u_n[u] == 0:
            raise ValueError(f"user {u} has no training check-ins")
        qx, qy = equirectangular_km(self.poi_lat[pois], self.poi_lon[pois],
                                    self.origin_lat[u], self.origin_lon[u])
        k = gaussian_kernel_2d(qx[:, None] - self.support_x[s], qy[:, None] - self.support_y[s],
                               self.h_x[u], self.h_y[u])
        return k @ self.weights[s] / self.u_n[u]

    def to_dict(self) -> dict:
        d = {k: encode_array(getattr(self, k)) for k in (
            "poi_lat", "poi_lon", "origin_lat", "origin_lon", "offsets", "support_x",
            "support_y", "weights", "h_x", "h_y", "u_n", "floored")}
        d["mode"] = self.mode
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeoKdeModel":
        mode = d["mode"]
        return cls(**{k: decode_array(v) for k, v in d.items() if k != "mode"}, mode=mode)


def fit_geo_kde(R: FrequencyMatrix, d: Dataset, mode: str = "user",
                floor: float = BANDWIDTH_FLOOR_KM) -> GeoKdeModel:
    """Fit the KDE from training counts ``R`` and POI coordinates in ``d``."""
    if mode not in ("user", "universal"):
        raise ValueError(f"unknown KDE mode {mode!r}")
    csr = R.csr
    n_users = csr.shape[0]
    lat_all, lon_all = np.asarray(d.poi_lat), np.asarray(d.poi_lon)
    origin_lat = np.zeros(n_users)
    origin_lon = np.zeros(n_users)
    sx, sy, ws = [], [], []
    sig = np.zeros((n_users, 2))
    n_sup = np.zeros(n_users)
    u_n = np.zeros(n_users)
    pooled = ([], [], [])
    for u in range(n_users):
        lo, hi = csr.indptr[u], csr.indptr[u + 1]
        pois = csr.indices[lo:hi]
        w = csr.data[lo:hi].astype(np.float64)
        n = w.sum()
        u_n[u] = n
        if n == 0:
            sx.append(np.zeros(0)), sy.append(np.zeros(0)), ws.append(np.zeros(0))
            continue
        origin_lat[u] = np.dot(w, lat_all[pois]) / n
        origin_lon[u] = np.dot(w, lon_all[pois]) / n
        x, y = equirectangular_km(lat_all[pois], lon_all[pois], origin_lat[u], origin_lon[u])
        sx.append(x), sy.append(y), ws.append(w)
        n_sup[u] = len(pois)
        sig[u] = weighted_std(x, w), weighted_std(y, w)
        if mode == "universal":
            pooled[0].append(x), pooled[1].append(y), pooled[2].append(w)
    if mode == "user":
        hx = silverman_bandwidth(sig[:, 0], np.maximum(n_sup, 1), floor)
        hy = silverman_bandwidth(sig[:, 1], np.maximum(n_sup, 1), floor)
        floored = (hx <= floor) | (hy <= floor)
    else:
        x, y, w = (np.concatenate(p) if p else np.zeros(0) for p in pooled)
        n = max(len(w), 1)
        hx = np.full(n_users, float(silverman_bandwidth(weighted_std(x, w), n, floor)))
        hy = np.full(n_users, float(silverman_bandwidth(weighted_std(y, w), n, floor)))
        floored = (hx <= floor) | (hy <= floor)
    offsets = np.concatenate([[0], np.cumsum([len(w) for w in ws])]).astype(np.int64)
    return GeoKdeModel(
        poi_lat=lat_all.copy(), poi_lon=lon_all.copy(), origin_lat=origin_lat, origin_lon=origin_lon,
        offsets=offsets, support_x=np.concatenate(sx), support_y=np.concatenate(sy),
        weights=np.concatenate(ws), h_x=hx, h_y=hy, u_n=u_n, floored=floored, mode=mode,
    )


def geo_score(m: GeoKdeModel, u: int, l: int) -> ContextScore:
    l = check_index(l, m.n_pois, "POI")
    return ContextScore(float(m.scores(u, [l])[0]), "G" if m.mode == "user" else "GU")
