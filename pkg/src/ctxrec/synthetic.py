"""Synthetic check-in data with planted geographic, sequential and social structure."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset
from .geo import EARTH_RADIUS_KM


@dataclass
class SyntheticConfig:
    """Knobs of the generator.

    Each user moves around ``centers_per_user`` personal centres.  A check-in
    is, in order of precedence: a hop along the global POI transition chain
    (probability ``transition_strength``), a revisit of an earlier POI, or a
    fresh draw from a 2D Gaussian around one of the centres snapped to the
    nearest POI.  Users with longer gaps between check-ins revisit more when
    ``gap_revisit_coupling > 0``.
    """

    n_users: int = 500
    n_pois: int = 2000
    n_checkins: int = 50_000
    min_checkins: int = 20
    centers_per_user: int = 2
    center_spread_km: float = 1.5
    region_km: float = 60.0
    origin: tuple = (40.70, -74.00)
    transition_strength: float = 0.35
    n_successors: int = 3
    successor_pool: int = 50
    revisit_rate: float = 0.25
    gap_revisit_coupling: float = 0.4
    mean_gap_hours: tuple = (2.0, 96.0)
    friends_per_user: float = 4.0
    homophily: float = 0.5
    shared_pois_per_edge: int = 2
    n_categories: int = 10
    start_time: int = 1_262_304_000

    def to_dict(self) -> dict:
        d = asdict(self)
        d["origin"] = list(self.origin)
        d["mean_gap_hours"] = list(self.mean_gap_hours)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        d = dict(d)
        for k in ("origin", "mean_gap_hours"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


def _validate(cfg: SyntheticConfig) -> None:
    if cfg.n_users < 1 or cfg.n_pois < 1:
        raise ValueError("need at least one user and one POI")
    if cfg.centers_per_user < 1:
        raise ValueError("centers_per_user must be >= 1")
    if cfg.centers_per_user > cfg.n_pois:
        raise ValueError(f"infeasible config: {cfg.centers_per_user} centres per user but only "
                         f"{cfg.n_pois} POIs")
    for name in ("transition_strength", "revisit_rate", "homophily"):
        v = getattr(cfg, name)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if cfg.center_spread_km < 0 or cfg.region_km <= 0:
        raise ValueError("spreads must be non-negative")


def generate_synthetic(cfg: SyntheticConfig, seed: int) -> Dataset:
    _validate(cfg)
    rng = np.random.default_rng(seed)
    lat0, lon0 = cfg.origin
    km_per_deg_lat = EARTH_RADIUS_KM * np.pi / 180.0
    km_per_deg_lon = km_per_deg_lat * np.cos(np.radians(lat0))

    # POIs uniformly over a square region, planar km coordinates
    xy = rng.uniform(-cfg.region_km / 2, cfg.region_km / 2, size=(cfg.n_pois, 2))
    tree = cKDTree(xy)
    k = min(cfg.successor_pool + 1, cfg.n_pois)
    succ = np.zeros((cfg.n_pois, max(cfg.n_successors, 1)), dtype=np.int64)
    if cfg.n_pois > 1:
        _, near = tree.query(xy, k=k)
        near = np.asarray(near).reshape(cfg.n_pois, -1)[:, 1:]
        for l in range(cfg.n_pois):
            succ[l] = rng.choice(near[l], size=succ.shape[1], replace=len(near[l]) < succ.shape[1])

    n_users = cfg.n_users
    w = rng.lognormal(0.0, 0.5, size=n_users)
    counts = np.maximum(cfg.min_checkins, np.round(cfg.n_checkins * w / w.sum())).astype(int)

    trait = rng.uniform(0.0, 1.0, size=n_users)
    g_lo, g_hi = cfg.mean_gap_hours
    mean_gap = g_lo * (g_hi / g_lo) ** trait
    revisit = np.clip(cfg.revisit_rate + cfg.gap_revisit_coupling * (trait - 0.5), 0.0, 0.95)

    seqs = []
    for u in range(n_users):
        n = counts[u]
        centers = xy[rng.choice(cfg.n_pois, size=cfg.centers_per_user, replace=False)]
        which = rng.integers(0, cfg.centers_per_user, size=n)
        pts = centers[which] + rng.normal(0.0, 1.0, size=(n, 2)) * cfg.center_spread_km
        _, fresh = tree.query(pts)
        fresh = np.atleast_1d(fresh)
        kind = rng.uniform(size=n)
        pick = rng.uniform(size=n)
        seq = np.empty(n, dtype=np.int64)
        for t in range(n):
            if t > 0 and kind[t] < cfg.transition_strength:
                row = succ[seq[t - 1]]
                seq[t] = row[int(pick[t] * len(row))]
            elif t > 0 and kind[t] < cfg.transition_strength + (1 - cfg.transition_strength) * revisit[u]:
                seq[t] = seq[int(pick[t] * t)]
            else:
                seq[t] = fresh[t]
        seqs.append(list(seq))

    n_edges = int(round(n_users * cfg.friends_per_user / 2))
    edges = set()
    if n_users > 1:
        tries = 0
        while len(edges) < n_edges and tries < 20 * n_edges + 100:
            a, b = rng.integers(0, n_users, size=2)
            tries += 1
            if a != b:
                edges.add((int(min(a, b)), int(max(a, b))))
    edges = sorted(edges)
    for a, b in edges:
        if rng.uniform() >= cfg.homophily:
            continue
        for src, dst in ((a, b), (b, a)):
            donor = np.unique(seqs[src])
            shared = rng.choice(donor, size=min(cfg.shared_pois_per_edge, len(donor)), replace=False)
            for l in shared:
                seqs[dst].insert(int(rng.integers(0, len(seqs[dst]) + 1)), int(l))

    users, pois, times = [], [], []
    for u, seq in enumerate(seqs):
        gaps = rng.exponential(mean_gap[u] * 3600.0, size=len(seq))
        t = cfg.start_time + int(rng.integers(0, 30 * 86400)) + np.cumsum(gaps).astype(np.int64)
        users.append(np.full(len(seq), u, dtype=np.int64))
        pois.append(np.asarray(seq, dtype=np.int64))
        times.append(t)

    lat = lat0 + xy[:, 1] / km_per_deg_lat
    lon = lon0 + xy[:, 0] / km_per_deg_lon
    cats = None
    cat_ids = None
    if cfg.n_categories > 0:
        cats = rng.integers(0, cfg.n_categories, size=cfg.n_pois)
        cat_ids = [f"c{i}" for i in range(cfg.n_categories)]
    return Dataset.build(
        user_ids=[f"u{i}" for i in range(n_users)],
        poi_ids=[f"p{i}" for i in range(cfg.n_pois)],
        poi_lat=lat, poi_lon=lon,
        users=np.concatenate(users), pois=np.concatenate(pois), timestamps=np.concatenate(times),
        social_pairs=edges, poi_category=cats, category_ids=cat_ids,
        category_names=None if cat_ids is None else {c: c for c in cat_ids},
    )
