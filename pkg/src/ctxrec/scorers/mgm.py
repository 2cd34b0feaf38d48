"""Multi-center Gaussian model of each user's activity areas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, FrequencyMatrix
from ..geo import haversine_km
from ..serialization import decode_array, encode_array, register
from .base import ContextScore, as_pois, check_index

DEFAULT_D_MAX_KM = 15.0
DEFAULT_THETA = 0.02
SIGMA_FLOOR_KM = 0.5


@register
@dataclass(frozen=True, eq=False)
class MgmModel:
    """Centers of all users; ``offsets[u]:offsets[u+1]`` slices user ``u``'s."""

    poi_lat: np.ndarray
    poi_lon: np.ndarray
    offsets: np.ndarray
    center_lat: np.ndarray
    center_lon: np.ndarray
    fraction: np.ndarray
    sigma: np.ndarray
    d_max: float = DEFAULT_D_MAX_KM
    theta: float = DEFAULT_THETA

    @property
    def n_users(self) -> int:
        return len(self.offsets) - 1

    @property
    def n_pois(self) -> int:
        return len(self.poi_lat)

    def centers(self, u: int):
        s = slice(self.offsets[u], self.offsets[u + 1])
        return self.center_lat[s], self.center_lon[s], self.fraction[s], self.sigma[s]

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.n_users, "user")
        pois = as_pois(pois, self.n_pois)
        clat, clon, frac, sig = self.centers(u)
        if len(frac) == 0:
            raise ValueError(f"user {u} has no training check-ins")
        d = haversine_km(self.poi_lat[pois][:, None], self.poi_lon[pois][:, None], clat, clon)
        return np.exp(-(d ** 2) / (2.0 * sig ** 2)) @ frac / frac.sum()

    def to_dict(self) -> dict:
        d = {k: encode_array(getattr(self, k)) for k in (
            "poi_lat", "poi_lon", "offsets", "center_lat", "center_lon", "fraction", "sigma")}
        d["d_max"], d["theta"] = self.d_max, self.theta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MgmModel":
        arrays = {k: decode_array(v) for k, v in d.items() if k not in ("d_max", "theta")}
        return cls(**arrays, d_max=d["d_max"], theta=d["theta"])


def _member_sigma(dist, counts) -> float:
    n = counts.sum()
    if n < 2:
        return SIGMA_FLOOR_KM
    mean = np.dot(counts, dist) / n
    sd = np.sqrt(np.dot(counts, (dist - mean) ** 2) / (n - 1))
    return max(float(sd), SIGMA_FLOOR_KM)


def _user_centers(lat, lon, counts, d_max, theta):
    # ties by coordinates, not POI index, so relabelling POIs cannot move a centre
    order = np.lexsort((np.arange(len(counts)), lon, lat, -counts))
    c_lat, c_lon, members = [], [], []
    for i in order:
        if c_lat:
            dist = haversine_km(lat[i], lon[i], np.array(c_lat), np.array(c_lon))
            j = int(np.argmin(dist))
            if dist[j] <= d_max:
                members[j].append(i)
                continue
        c_lat.append(lat[i]), c_lon.append(lon[i]), members.append([i])
    total = counts.sum()
    out = []
    for clat, clon, mem in zip(c_lat, c_lon, members):
        mem = np.array(mem)
        frac = counts[mem].sum() / total
        if frac < theta:
            continue
        dist = haversine_km(lat[mem], lon[mem], clat, clon)
        out.append((clat, clon, frac, _member_sigma(np.atleast_1d(dist), counts[mem])))
    if not out:
        mlat, mlon = np.dot(counts, lat) / total, np.dot(counts, lon) / total
        dist = np.atleast_1d(haversine_km(lat, lon, mlat, mlon))
        out.append((mlat, mlon, 1.0, _member_sigma(dist, counts)))
    return out


def fit_mgm(R: FrequencyMatrix, d: Dataset, d_max: float = DEFAULT_D_MAX_KM,
            theta: float = DEFAULT_THETA) -> MgmModel:
    """Greedy center discovery per user, most visited POIs first."""
    csr = R.csr
    offsets = [0]
    rows = []
    for u in range(csr.shape[0]):
        lo, hi = csr.indptr[u], csr.indptr[u + 1]
        pois = csr.indices[lo:hi]
        counts = csr.data[lo:hi].astype(np.float64)
        if len(pois):
            rows.extend(_user_centers(d.poi_lat[pois], d.poi_lon[pois], counts, d_max, theta))
        offsets.append(len(rows))
    arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return MgmModel(
        poi_lat=np.array(d.poi_lat), poi_lon=np.array(d.poi_lon),
        offsets=np.array(offsets, dtype=np.int64),
        center_lat=arr[:, 0].copy(), center_lon=arr[:, 1].copy(),
        fraction=arr[:, 2].copy(), sigma=arr[:, 3].copy(), d_max=float(d_max), theta=float(theta),
    )


def mgm_score(m: MgmModel, u: int, l: int) -> ContextScore:
    l = check_index(l, m.n_pois, "POI")
    return ContextScore(float(m.scores(u, [l])[0]), "MGM")
