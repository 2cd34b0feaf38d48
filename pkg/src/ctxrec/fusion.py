"""Sum-rule fusion of a base ranker with context scores, and top-n lists.

Model labels follow the ``Model-(Contexts)`` naming: ``M``, ``N-(ST)``,
``M-(GSTC)``.  Pure context bundles without a base ranker use ``X-(...)``,
and the three classic baselines are aliases for fixed scorer bundles:

=================  ====================================================
``GeoSoCa-(…)``    G = KDE with a universal bandwidth, S, C
``FCFKDEAMC-(…)``  G = per-user KDE, S = friend-based CF, T
``PFMMGM-(…)``     M = Poisson factor model base, G = multi-center Gaussian
=================  ====================================================

Contexts that have no one-letter code are spelled out between ``+``
signs, e.g. ``M-(G+FCF)``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .scorers.base import CONTEXT_TAGS

log = logging.getLogger(__name__)

NORMALIZATIONS = ("none", "minmax")
LETTERS = ("G", "T", "S", "C")
BASELINES = {
    "GeoSoCa": {"G": "GU", "S": "S", "C": "C"},
    "FCFKDEAMC": {"G": "G", "S": "FCF", "T": "T"},
    "PFMMGM": {"G": "MGM"},
}
_ORDER = {t: i for i, t in enumerate(("G", "GU", "S", "FCF", "T", "C", "MGM"))}


@dataclass(frozen=True)
class FusionConfig:
    base: Optional[str] = "M"
    contexts: tuple = ()
    normalization: str = "minmax"
    n: int = 20

    def __post_init__(self):
        if self.base not in ("M", "N", None):
            raise ValueError(f"unknown base ranker {self.base!r}")
        ctx = tuple(self.contexts)
        object.__setattr__(self, "contexts", ctx)
        for c in ctx:
            if c not in CONTEXT_TAGS:
                raise ValueError(f"unknown context {c!r}")
        if len(set(ctx)) != len(ctx):
            raise ValueError("contexts must not repeat")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.base is None and not ctx:
            raise ValueError("a model needs a base ranker or at least one context")

    @property
    def label(self) -> str:
        return encode_label(self)

    def canonical(self) -> "FusionConfig":
        return FusionConfig(self.base, tuple(sorted(self.contexts, key=_ORDER.get)),
                            self.normalization, self.n)


def encode_label(cfg: FusionConfig) -> str:
    ctx = sorted(cfg.contexts, key=_ORDER.get)
    tags = set(ctx)
    if cfg.base is None and "GU" in tags and tags <= {"GU", "S", "C"}:
        return "GeoSoCa-({})".format("".join({"GU": "G", "S": "S", "C": "C"}[c] for c in ctx))
    if cfg.base is None and "FCF" in tags and tags <= {"G", "T", "FCF"}:
        order = [c for c in ("G", "FCF", "T") if c in tags]
        return "FCFKDEAMC-({})".format("".join({"G": "G", "T": "T", "FCF": "S"}[c] for c in order))
    if tags == {"MGM"} and cfg.base != "N":
        return "PFMMGM-(MG)" if cfg.base == "M" else "PFMMGM-(G)"
    base = cfg.base or "X"
    if not ctx:
        return base
    if all(c in LETTERS for c in ctx):
        return f"{base}-({''.join(ctx)})"
    return f"{base}-({'+'.join(ctx)})"


_LABEL = re.compile(r"^(?P<name>[A-Za-z]+)(?:-\((?P<ctx>[A-Za-z+]*)\))?$")


def parse_label(label: str, normalization: str = "minmax", n: int = 20) -> FusionConfig:
    """Inverse of :func:`encode_label`; also accepts every baseline alias spelling."""
    m = _LABEL.match(label.strip())
    if not m:
        raise ValueError(f"cannot parse model label {label!r}")
    name, ctx = m.group("name"), m.group("ctx") or ""
    if name in BASELINES:
        table = BASELINES[name]
        base = None
        contexts = []
        for ch in ctx:
            if name == "PFMMGM" and ch == "M":
                base = "M"
            elif ch in table:
                contexts.append(table[ch])
            else:
                raise ValueError(f"{name} has no context {ch!r}")
        return FusionConfig(base, tuple(contexts), normalization, n)
    if name not in ("M", "N", "X"):
        raise ValueError(f"unknown model {name!r}")
    if ctx in CONTEXT_TAGS or "+" in ctx:
        contexts = tuple(c for c in ctx.split("+") if c)
    else:
        contexts = tuple(ctx)
    return FusionConfig(None if name == "X" else name, contexts, normalization, n)


def minmax(v) -> np.ndarray:
    """Map onto [0, 1] with min -> 0 and max -> 1; constant input maps to 0."""
    v = np.asarray(v, dtype=np.float64)
    if len(v) == 0:
        return v.copy()
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    out = (v - lo) / (hi - lo)
    out[v == hi] = 1.0
    return out


def fuse(base_score, context_scores: dict, cfg: FusionConfig):
    """Sum the base score and the configured context scores.

    Inputs are scalars or arrays over one user's candidate set; with
    ``normalization="minmax"`` every component is rescaled over that set
    before summing.  A missing base (``cfg.base is None``) contributes 0, and
    so does a context that is constant across the candidates.
    """
    missing = [c for c in cfg.contexts if c not in context_scores]
    if missing:
        raise KeyError(f"missing context scores for {missing}")
    extra = [c for c in context_scores if c not in cfg.contexts]
    if extra:
        raise KeyError(f"unexpected context scores for {extra}")
    norm = minmax if cfg.normalization == "minmax" else (lambda v: np.asarray(v, dtype=np.float64))
    parts = [] if cfg.base is None else [norm(np.atleast_1d(base_score))]
    for c in cfg.contexts:
        p = norm(np.atleast_1d(context_scores[c]))
        # a context constant over several candidates cannot reorder them, but adding
        # it in floating point can absorb small base differences into ties
        if len(p) > 1 and p.max() == p.min():
            continue
        parts.append(p)
    shape = np.broadcast_shapes(*(np.shape(np.atleast_1d(v)) for v in
                                  [base_score, *context_scores.values()]))
    total = np.zeros(shape)
    for p in parts:
        total = total + p
    if np.ndim(base_score) == 0 and all(np.ndim(context_scores[c]) == 0 for c in cfg.contexts):
        return float(total[0])
    return total


@dataclass(frozen=True)
class RecommendationList:
    user: int
    pois: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.pois)


def recommend_top_n(u: int, candidates, scorer: Union[Callable, Sequence, np.ndarray], n: int,
                    train_pois=None) -> RecommendationList:
    """Top-``n`` candidates by descending score; ties go to the lower POI index."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if train_pois is not None and np.isin(candidates, train_pois).any():
        raise ValueError("candidate set contains POIs from the user's training set")
    if len(candidates) == 0:
        log.info("user %d has no candidates", u)
        return RecommendationList(u, np.zeros(0, np.int64), np.zeros(0))
    scores = np.asarray(scorer(candidates) if callable(scorer) else scorer, dtype=np.float64)
    if scores.shape != candidates.shape:
        raise ValueError("one score per candidate required")
    order = np.lexsort((candidates, -scores))[:n]
    return RecommendationList(u, candidates[order], scores[order])


def write_recommendations(lists, user_ids, poi_ids, path) -> None:
    """``user_id<TAB>rank<TAB>poi_id<TAB>score`` rows, ranks starting at 1."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in lists:
            for rank, (l, s) in enumerate(zip(rec.pois, rec.scores), start=1):
                fh.write(f"{user_ids[rec.user]}\t{rank}\t{poi_ids[l]}\t{float(s)!r}\n")
