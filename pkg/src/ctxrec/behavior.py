"""User behaviour aspects: travel distance, check-in density and exploration."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .geo import haversine_km

log = logging.getLogger(__name__)

ASPECTS = ("geo", "temporal", "exploration")
N_BUCKETS = 5


@dataclass(frozen=True)
class BehaviorProfile:
    user: int
    mean_consecutive_distance_km: float
    mean_consecutive_gap_hours: float
    exploration_factor: float

    def aspect(self, name: str) -> float:
        return {"geo": self.mean_consecutive_distance_km,
                "temporal": self.mean_consecutive_gap_hours,
                "exploration": self.exploration_factor}[name]


def exploration_factor(pois) -> float:
    """Unique visited POIs over total check-ins; 1.0 means the user never revisits."""
    pois = np.asarray(pois)
    if len(pois) == 0:
        raise ValueError("exploration factor needs at least one check-in")
    return len(np.unique(pois)) / len(pois)


def consecutive_behavior(lat, lon, timestamps, stat: str = "mean"):
    """(distance km, gap hours) summarised over chronologically consecutive pairs."""
    lat, lon = np.asarray(lat, dtype=float), np.asarray(lon, dtype=float)
    t = np.asarray(timestamps, dtype=np.float64)
    if len(t) < 2:
        raise ValueError("need at least two check-ins")
    order = np.argsort(t, kind="stable")
    lat, lon, t = lat[order], lon[order], t[order]
    dist = np.atleast_1d(haversine_km(lat[:-1], lon[:-1], lat[1:], lon[1:]))
    gaps = np.diff(t) / 3600.0
    f = {"mean": np.mean, "median": np.median}[stat]
    return float(f(dist)), float(f(gaps))


def behavior_profiles(train: Dataset, stat: str = "mean") -> list:
    """Profiles from training check-ins; distance and gap are NaN below two check-ins."""
    out = []
    for u in range(train.n_users):
        s = train.user_slice(u)
        pois = train.pois[s]
        if len(pois) == 0:
            continue
        if len(pois) >= 2:
            d, g = consecutive_behavior(train.poi_lat[pois], train.poi_lon[pois], train.timestamps[s], stat)
        else:
            d = g = math.nan
        out.append(BehaviorProfile(u, d, g, exploration_factor(pois)))
    return out


def pearson_r(x, y) -> float:
    """Pearson product-moment correlation; NaN (with a log line) if either input is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or len(x) < 2:
        raise ValueError("need two equal-length vectors of at least two values")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(np.dot(dx, dx)), math.sqrt(np.dot(dy, dy))
    if sx == 0.0 or sy == 0.0:
        log.warning("pearson_r undefined for a constant vector")
        return math.nan
    return float(max(-1.0, min(1.0, np.dot(dx, dy) / (sx * sy))))


def behavior_correlations(profiles) -> dict:
    """Pairwise Pearson r among the three aspects over users where all are defined."""
    rows = np.array([[p.mean_consecutive_distance_km, p.mean_consecutive_gap_hours,
                      p.exploration_factor] for p in profiles], dtype=np.float64).reshape(-1, 3)
    rows = rows[np.all(np.isfinite(rows), axis=1)]
    return {
        ("geo", "exploration"): pearson_r(rows[:, 0], rows[:, 2]),
        ("temporal", "exploration"): pearson_r(rows[:, 1], rows[:, 2]),
        ("temporal", "geo"): pearson_r(rows[:, 1], rows[:, 0]),
    }


def quintile_boundaries(values) -> np.ndarray:
    """Upper edges of the five buckets: the 20/40/60/80/100th percentiles.

    Uses the inverted-CDF definition (the smallest observed value whose
    empirical CDF reaches the level), which keeps bucket sizes within one of
    each other when the values are distinct.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = len(v)
    idx = [math.ceil(q * n / N_BUCKETS) - 1 for q in range(1, N_BUCKETS + 1)]
    return v[idx]


def assign_buckets(values, boundaries) -> np.ndarray:
    return np.searchsorted(boundaries, np.asarray(values, dtype=np.float64), side="left")


@dataclass(frozen=True)
class BucketedReport:
    aspect: str
    metric: str
    boundaries: np.ndarray
    counts: np.ndarray
    means: dict
    degenerate: bool

    def global_mean(self, model: str) -> float:
        m = np.asarray(self.means[model])
        ok = self.counts > 0
        return float(np.dot(m[ok], self.counts[ok]) / self.counts.sum())


def bucketize_and_aggregate(profiles, per_user: dict, aspect: str, metric: str = "nDCG@20") -> BucketedReport:
    """Quintile buckets over ``aspect`` and the mean metric per bucket for each model.

    ``per_user`` maps model -> (users, values).  Only users that have a defined
    aspect and a metric value for every model are bucketed.
    """
    if aspect not in ASPECTS:
        raise ValueError(f"unknown aspect {aspect!r}")
    aspect_of = {p.user: p.aspect(aspect) for p in profiles if np.isfinite(p.aspect(aspect))}
    common = set(aspect_of)
    lookup = {}
    for model, (users, values) in per_user.items():
        lookup[model] = dict(zip(np.asarray(users).tolist(), np.asarray(values, dtype=float)))
        common &= set(lookup[model])
    users = sorted(common)
    if len(users) < N_BUCKETS:
        raise ValueError(f"need at least {N_BUCKETS} users with a defined {aspect} aspect")
    vals = np.array([aspect_of[u] for u in users])
    bounds = quintile_boundaries(vals)
    bucket = assign_buckets(vals, bounds)
    counts = np.bincount(bucket, minlength=N_BUCKETS)
    degenerate = int((counts > 0).sum()) < N_BUCKETS
    if degenerate:
        log.warning("%s: only %d non-empty buckets", aspect, int((counts > 0).sum()))
    means = {}
    for model in per_user:
        m = np.array([lookup[model][u] for u in users])
        means[model] = np.array([m[bucket == b].mean() if counts[b] else math.nan
                                 for b in range(N_BUCKETS)])
    return BucketedReport(aspect, metric, bounds, counts, means, degenerate)


def write_profiles_csv(profiles, user_ids, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "mean_consecutive_distance_km", "mean_consecutive_gap_hours",
                    "exploration_factor"])
        for p in profiles:
            w.writerow([user_ids[p.user], repr(p.mean_consecutive_distance_km),
                        repr(p.mean_consecutive_gap_hours), repr(p.exploration_factor)])
