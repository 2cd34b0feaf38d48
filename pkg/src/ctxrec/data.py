"""Check-in datasets: loading, filtering, temporal splitting and sampling.

A :class:`Dataset` stores its check-ins as three parallel integer arrays
(user index, POI index, timestamp) sorted by user and then by timestamp.
Identifiers from the input files are kept in registries and mapped to dense
indices in first-seen order.  Train/test/validation views share the
registries of the dataset they were cut from, so indices stay comparable
across views.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

N_TEST_NEGATIVES = 1000


class LoadError(ValueError):
    """Raised when an input file is malformed or inconsistent."""


@dataclass(frozen=True)
class CheckinEvent:
    user_id: str
    poi_id: str
    timestamp: int


@dataclass(frozen=True)
class Poi:
    poi_id: str
    lat: float
    lon: float
    category_id: Optional[str] = None


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Undirected friendship graph over user indices.

    ``edges`` holds each edge once as ``(a, b)`` with ``a < b``.
    """

    edges: np.ndarray
    n_users: int

    @classmethod
    def from_pairs(cls, pairs, n_users: int) -> "SocialGraph":
        pairs = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        pairs = pairs.reshape(-1, 2)
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        if len(pairs) and (pairs.min() < 0 or pairs.max() >= n_users):
            raise ValueError("social edge references a user outside the registry")
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        uniq = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(pairs) else np.zeros((0, 2), np.int64)
        return cls(_readonly(uniq, np.int64).reshape(-1, 2), n_users)

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, pair) -> bool:
        a, b = pair
        return bool(self.adjacency[a, b])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric binary user x user matrix."""
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_users, self.n_users))

    def friends(self, u: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[u]:adj.indptr[u + 1]]


@dataclass(frozen=True, eq=False)
class Dataset:
    user_ids: tuple
    poi_ids: tuple
    poi_lat: np.ndarray
    poi_lon: np.ndarray
    users: np.ndarray
    pois: np.ndarray
    timestamps: np.ndarray
    social: SocialGraph
    poi_category: Optional[np.ndarray] = None
    category_ids: Optional[tuple] = None
    category_names: Optional[dict] = None

    @classmethod
    def build(cls, user_ids, poi_ids, poi_lat, poi_lon, users, pois, timestamps,
              social_pairs=(), poi_category=None, category_ids=None, category_names=None,
              presorted=False) -> "Dataset":
        """Validate inputs and sort check-ins by (user, timestamp), stable."""
        users = np.asarray(users, dtype=np.int64)
        pois = np.asarray(pois, dtype=np.int64)
        timestamps = np.asarray(timestamps, dtype=np.int64)
        if not (len(users) == len(pois) == len(timestamps)):
            raise ValueError("check-in arrays differ in length")
        if len(timestamps) and timestamps.min() < 0:
            raise ValueError("negative timestamp")
        if not presorted:
            order = np.lexsort((np.arange(len(users)), timestamps, users))
            users, pois, timestamps = users[order], pois[order], timestamps[order]
        if poi_category is not None:
            poi_category = _readonly(poi_category, np.int64)
        social = social_pairs if isinstance(social_pairs, SocialGraph) else SocialGraph.from_pairs(
            social_pairs, len(user_ids))
        return cls(
            user_ids=tuple(user_ids), poi_ids=tuple(poi_ids),
            poi_lat=_readonly(poi_lat, np.float64), poi_lon=_readonly(poi_lon, np.float64),
            users=_readonly(users, np.int64), pois=_readonly(pois, np.int64),
            timestamps=_readonly(timestamps, np.int64), social=social,
            poi_category=poi_category,
            category_ids=None if category_ids is None else tuple(category_ids),
            category_names=category_names,
        )

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_pois(self) -> int:
        return len(self.poi_ids)

    @property
    def n_checkins(self) -> int:
        return len(self.users)

    @property
    def has_categories(self) -> bool:
        return self.poi_category is not None

    @property
    def n_categories(self) -> int:
        return 0 if self.category_ids is None else len(self.category_ids)

    @cached_property
    def offsets(self) -> np.ndarray:
        """``offsets[u]:offsets[u+1]`` indexes user ``u``'s check-ins."""
        return np.searchsorted(self.users, np.arange(self.n_users + 1), side="left")

    def user_slice(self, u: int) -> slice:
        return slice(int(self.offsets[u]), int(self.offsets[u + 1]))

    def user_pois(self, u: int) -> np.ndarray:
        return self.pois[self.user_slice(u)]

    def user_times(self, u: int) -> np.ndarray:
        return self.timestamps[self.user_slice(u)]

    def user_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def poi(self, i: int) -> Poi:
        cat = None
        if self.poi_category is not None:
            cat = self.category_ids[self.poi_category[i]]
        return Poi(self.poi_ids[i], float(self.poi_lat[i]), float(self.poi_lon[i]), cat)

    def events(self) -> Iterator[CheckinEvent]:
        for u, l, t in zip(self.users, self.pois, self.timestamps):
            yield CheckinEvent(self.user_ids[u], self.poi_ids[l], int(t))

    def with_checkins(self, mask: np.ndarray) -> "Dataset":
        """A view with the same registries and a subset of check-ins."""
        return Dataset(
            user_ids=self.user_ids, poi_ids=self.poi_ids, poi_lat=self.poi_lat,
            poi_lon=self.poi_lon, users=_readonly(self.users[mask], np.int64),
            pois=_readonly(self.pois[mask], np.int64),
            timestamps=_readonly(self.timestamps[mask], np.int64), social=self.social,
            poi_category=self.poi_category, category_ids=self.category_ids,
            category_names=self.category_names,
        )


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    test: Dataset
    validation: Dataset


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    """Sparse user x POI visit counts of a training view."""

    csr: sp.csr_matrix

    @property
    def shape(self):
        return self.csr.shape

    @property
    def total(self) -> int:
        return int(self.csr.sum())

    def __getitem__(self, key) -> int:
        u, l = key
        return int(self.csr[u, l])

    def items(self) -> dict:
        coo = self.csr.tocoo()
        return {(int(u), int(l)): int(c) for u, l, c in zip(coo.row, coo.col, coo.data)}

    def row(self, u: int) -> np.ndarray:
        """Dense count vector of user ``u``."""
        return np.asarray(self.csr[u].todense(), dtype=np.float64).ravel()

    def visited(self, u: int) -> np.ndarray:
        return self.csr.indices[self.csr.indptr[u]:self.csr.indptr[u + 1]]


@dataclass(frozen=True, eq=False)
class InteractionSamples:
    """Column-wise (user, poi, label) triples; label 1 = observed, 0 = sampled negative."""

    users: np.ndarray
    pois: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.labels is None:
            object.__setattr__(self, "labels", np.zeros(len(self.users), dtype=np.int8))

    def __len__(self) -> int:
        return len(self.users)

    def for_user(self, u: int) -> np.ndarray:
        return self.pois[self.users == u]

    @classmethod
    def concat(cls, parts: Sequence["InteractionSamples"]) -> "InteractionSamples":
        return cls(np.concatenate([p.users for p in parts]),
                   np.concatenate([p.pois for p in parts]),
                   np.concatenate([p.labels for p in parts]))


# --------------------------------------------------------------------------- loading

def _rows(path: Path, min_cols: int, max_cols: int):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            cols = line.split("\t")
            if not (min_cols <= len(cols) <= max_cols):
                raise LoadError(f"{path}:{lineno}: expected {min_cols}-{max_cols} tab-separated "
                                f"columns, got {len(cols)}")
            yield lineno, cols


def load_dataset(checkin_path, poi_path, social_path=None, category_path=None) -> Dataset:
    """Read the TSV files described in the README into a :class:`Dataset`."""
    poi_index: dict[str, int] = {}
    lats, lons, cats = [], [], []
    cat_index: dict[str, int] = {}
    cat_names: dict[str, str] = {}
    if category_path is not None:
        for lineno, cols in _rows(Path(category_path), 1, 2):
            cid = cols[0]
            if cid not in cat_index:
                cat_index[cid] = len(cat_index)
                cat_names[cid] = cols[1] if len(cols) > 1 else ""

    with_cat = None
    for lineno, cols in _rows(Path(poi_path), 3, 4):
        pid = cols[0]
        try:
            lat, lon = float(cols[1]), float(cols[2])
        except ValueError:
            raise LoadError(f"{poi_path}:{lineno}: non-numeric coordinate") from None
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise LoadError(f"{poi_path}:{lineno}: coordinate out of range for poi {pid!r}")
        has_cat = len(cols) == 4 and cols[3] != ""
        if with_cat is None:
            with_cat = has_cat
        elif with_cat != has_cat:
            raise LoadError(f"{poi_path}:{lineno}: category column must be present for all POIs or none")
        if pid in poi_index:
            raise LoadError(f"{poi_path}:{lineno}: duplicate poi {pid!r}")
        poi_index[pid] = len(poi_index)
        lats.append(lat)
        lons.append(lon)
        if has_cat:
            cid = cols[3]
            if cid not in cat_index:
                if category_path is not None:
                    raise LoadError(f"{poi_path}:{lineno}: unknown category {cid!r}")
                cat_index[cid] = len(cat_index)
            cats.append(cat_index[cid])

    user_index: dict[str, int] = {}
    us, ls, ts = [], [], []
    for lineno, cols in _rows(Path(checkin_path), 3, 3):
        uid, pid, t = cols
        if pid not in poi_index:
            raise LoadError(f"{checkin_path}:{lineno}: check-in references unknown poi {pid!r}")
        try:
            t = int(t)
        except ValueError:
            raise LoadError(f"{checkin_path}:{lineno}: timestamp is not an integer") from None
        if t < 0:
            raise LoadError(f"{checkin_path}:{lineno}: negative timestamp")
        us.append(user_index.setdefault(uid, len(user_index)))
        ls.append(poi_index[pid])
        ts.append(t)

    pairs = []
    dropped = 0
    if social_path is not None:
        for lineno, cols in _rows(Path(social_path), 2, 2):
            a, b = user_index.get(cols[0]), user_index.get(cols[1])
            if a is None or b is None:
                dropped += 1
                continue
            if a != b:
                pairs.append((a, b))
    if dropped:
        log.info("dropped %d social edges touching users without check-ins", dropped)

    return Dataset.build(
        user_ids=list(user_index), poi_ids=list(poi_index), poi_lat=lats, poi_lon=lons,
        users=us, pois=ls, timestamps=ts, social_pairs=pairs,
        poi_category=cats if with_cat else None,
        category_ids=list(cat_index) if with_cat else None,
        category_names={k: cat_names.get(k, "") for k in cat_index} if with_cat else None,
    )


def write_dataset(d: Dataset, out_dir) -> None:
    """Write ``d`` in the loader's TSV formats (plus ``index_map.tsv``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "checkins.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for ev in d.events():
            fh.write(f"{ev.user_id}\t{ev.poi_id}\t{ev.timestamp}\n")
    with open(out / "pois.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(d.n_pois):
            p = d.poi(i)
            tail = f"\t{p.category_id}" if p.category_id is not None else ""
            fh.write(f"{p.poi_id}\t{p.lat!r}\t{p.lon!r}{tail}\n")
    with open(out / "social.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for a, b in d.social.edges:
            fh.write(f"{d.user_ids[a]}\t{d.user_ids[b]}\n")
    if d.has_categories:
        with open(out / "categories.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for cid in d.category_ids:
                fh.write(f"{cid}\t{(d.category_names or {}).get(cid, '')}\n")
    write_index_map(d, out / "index_map.tsv")


def write_index_map(d: Dataset, path) -> None:
    """Rows of ``kind<TAB>index<TAB>id`` for users, POIs and categories."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for kind, ids in (("user", d.user_ids), ("poi", d.poi_ids), ("category", d.category_ids or ())):
            for i, ident in enumerate(ids):
                fh.write(f"{kind}\t{i}\t{ident}\n")


# --------------------------------------------------------------------------- preprocessing

def _compact(d: Dataset, keep_users: np.ndarray, keep_pois: np.ndarray) -> Dataset:
    mask = keep_users[d.users] & keep_pois[d.pois]
    users, pois, ts = d.users[mask], d.pois[mask], d.timestamps[mask]
    # users left without any check-in are dropped from the registry
    keep_users = keep_users & (np.bincount(users, minlength=d.n_users) > 0)
    umap = np.full(d.n_users, -1, dtype=np.int64)
    umap[keep_users] = np.arange(int(keep_users.sum()))
    lmap = np.full(d.n_pois, -1, dtype=np.int64)
    lmap[keep_pois] = np.arange(int(keep_pois.sum()))
    e = d.social.edges
    e = e[keep_users[e[:, 0]] & keep_users[e[:, 1]]]
    cat = None if d.poi_category is None else d.poi_category[keep_pois]
    return Dataset.build(
        user_ids=[u for u, k in zip(d.user_ids, keep_users) if k],
        poi_ids=[p for p, k in zip(d.poi_ids, keep_pois) if k],
        poi_lat=d.poi_lat[keep_pois], poi_lon=d.poi_lon[keep_pois],
        users=umap[users], pois=lmap[pois], timestamps=ts,
        social_pairs=umap[e], poi_category=cat, category_ids=d.category_ids,
        category_names=d.category_names, presorted=True,
    )


def filter_dataset(d: Dataset, min_user_checkins: int, min_poi_visitors: int,
                   fixpoint: bool = False) -> Dataset:
    """Drop sparse users, then POIs with too few distinct visitors.

    One pass by default; ``fixpoint=True`` repeats until nothing changes.
    """
    if min_user_checkins < 0 or min_poi_visitors < 0:
        raise ValueError("thresholds must be non-negative")
    while True:
        keep_users = d.user_counts() >= min_user_checkins
        mask = keep_users[d.users]
        pairs = np.unique(np.stack([d.users[mask], d.pois[mask]], axis=1), axis=0)
        visitors = np.bincount(pairs[:, 1], minlength=d.n_pois) if len(pairs) else np.zeros(d.n_pois, int)
        keep_pois = visitors >= min_poi_visitors
        out = _compact(d, keep_users, keep_pois)
        if not fixpoint or (out.n_users == d.n_users and out.n_pois == d.n_pois
                            and out.n_checkins == d.n_checkins):
            return out
        d = out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def split_sizes(n: int, fractions=(0.7, 0.2, 0.1)) -> tuple[int, int, int]:
    """Per-user (train, test, validation) counts for ``n`` check-ins."""
    f_train, f_test, _ = fractions
    if n < 3 and f_train < 1.0:
        return n, 0, 0
    n_train = min(_round_half_up(f_train * n), n)
    if f_test > 0 and n >= 2:
        n_train = min(n_train, n - 1)
    n_test = min(_round_half_up(f_test * n), n - n_train)
    return n_train, n_test, n - n_train - n_test


def temporal_split(d: Dataset, fractions=(0.7, 0.2, 0.1)) -> SplitDataset:
    """Chronological per-user split: earliest check-ins train, then test, then validation."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) < 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be three non-negative numbers summing to 1")
    counts = d.user_counts()
    if len(counts) and counts.min() < 1:
        raise ValueError("every user needs at least one check-in")
    part = np.zeros(d.n_checkins, dtype=np.int8)
    short = 0
    for u in range(d.n_users):
        n = int(counts[u])
        if n < 3 and fractions[0] < 1.0:
            short += 1
        n_train, n_test, _ = split_sizes(n, fractions)
        start = int(d.offsets[u])
        part[start + n_train:start + n_train + n_test] = 1
        part[start + n_train + n_test:start + n] = 2
    if short:
        log.warning("%d users with fewer than 3 check-ins were assigned to train only", short)
    return SplitDataset(d.with_checkins(part == 0), d.with_checkins(part == 1), d.with_checkins(part == 2))


def build_frequency_matrix(train: Dataset) -> FrequencyMatrix:
    data = np.ones(train.n_checkins, dtype=np.int64)
    m = sp.csr_matrix((data, (train.users, train.pois)), shape=(train.n_users, train.n_pois))
    m.sum_duplicates()
    m.sort_indices()
    return FrequencyMatrix(m)


def sample_negatives(split: SplitDataset, mode: str, seed: int,
                     n_test: int = N_TEST_NEGATIVES) -> InteractionSamples:
    """Uniformly sample unvisited POIs per user, without replacement.

    ``mode="train"``: as many negatives as the user has unique training POIs,
    drawn from POIs outside the training set.  ``mode="test"``:
    ``min(n_test, pool)`` negatives from POIs outside both the training and the
    test set of the user.
    """
    if mode not in ("train", "test"):
        raise ValueError(f"unknown mode {mode!r}")
    train = split.train
    rng = np.random.default_rng(seed)
    n_pois = train.n_pois
    users, pois = [], []
    empty = 0
    for u in range(train.n_users):
        seen = np.zeros(n_pois, dtype=bool)
        train_pois = np.unique(train.user_pois(u))
        seen[train_pois] = True
        if mode == "train":
            want = len(train_pois)
        else:
            seen[split.test.user_pois(u)] = True
        pool = np.flatnonzero(~seen)
        if mode == "test":
            want = min(n_test, len(pool))
        if len(pool) == 0:
            empty += 1
            continue
        want = min(want, len(pool))
        chosen = np.sort(rng.choice(pool, size=want, replace=False))
        users.append(np.full(want, u, dtype=np.int64))
        pois.append(chosen.astype(np.int64))
    if empty:
        log.info("%d users have an empty negative pool", empty)
    if not users:
        return InteractionSamples(np.zeros(0, np.int64), np.zeros(0, np.int64))
    return InteractionSamples(np.concatenate(users), np.concatenate(pois))


def training_samples(split: SplitDataset, seed: int) -> InteractionSamples:
    """Unique training POIs (label 1) plus an equal number of negatives (label 0)."""
    R = build_frequency_matrix(split.train).csr.tocoo()
    pos = InteractionSamples(R.row.astype(np.int64), R.col.astype(np.int64),
                             np.ones(R.nnz, dtype=np.int8))
    neg = sample_negatives(split, "train", seed)
    return InteractionSamples.concat([pos, neg])


def dataset_statistics(d: Dataset) -> dict:
    """Summary counts in the layout of the usual dataset table."""
    n_unique = len(np.unique(d.users * d.n_pois + d.pois)) if d.n_checkins else 0
    cells = d.n_users * d.n_pois
    return {
        "users": d.n_users,
        "pois": d.n_pois,
        "checkins": d.n_checkins,
        "unique_checkins": n_unique,
        "categories": d.n_categories if d.has_categories else None,
        "social_links": len(d.social),
        "checkins_per_user": d.n_checkins / d.n_users if d.n_users else 0.0,
        "checkins_per_poi": d.n_checkins / d.n_pois if d.n_pois else 0.0,
        "sparsity": 1.0 - n_unique / cells if cells else 1.0,
    }


def format_statistics(rows: dict) -> str:
    """Render ``{name: dataset_statistics(...)}`` as a text table."""
    head = ["Dataset", "|U|", "|L|", "|C|", "|CU|", "|CT|", "|S|", "|C|/|U|", "|C|/|L|", "%Sparsity"]
    lines = ["\t".join(head)]
    for name, s in rows.items():
        lines.append("\t".join([
            name, f"{s['users']:,}", f"{s['pois']:,}", f"{s['checkins']:,}",
            f"{s['unique_checkins']:,}", "-" if s["categories"] is None else f"{s['categories']:,}",
            f"{s['social_links']:,}", f"{s['checkins_per_user']:.2f}",
            f"{s['checkins_per_poi']:.2f}", f"{100 * s['sparsity']:.2f}%",
        ]))
    return "\n".join(lines)
