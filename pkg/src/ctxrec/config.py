"""Experiment configuration: a single JSON document checked against :data:`SCHEMA`."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .evaluation.metrics import METRICS
from .fusion import parse_label
from .models.ncf import NcfParams
from .models.pfm import PfmParams
from .synthetic import SyntheticConfig


class ConfigError(ValueError):
    """The experiment description is invalid."""


_NUM = {"type": "number"}
_INT = {"type": "integer"}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ctxrec experiment",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "required": ["checkins", "pois"],
            "properties": {k: {"type": ["string", "null"]} for k in
                           ("checkins", "pois", "social", "categories")},
        },
        "synthetic": {"type": "object"},
        "filter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"min_user_checkins": {"type": "integer", "minimum": 0},
                           "min_poi_visitors": {"type": "integer", "minimum": 0},
                           "fixpoint": {"type": "boolean"}},
        },
        "split": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 3,
                  "maxItems": 3},
        "models": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "normalization": {"enum": ["none", "minmax"]},
        "metrics": {"type": "array", "items": {"enum": list(METRICS)}, "minItems": 1},
        "K": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "n_test_negatives": {"type": "integer", "minimum": 1},
        "cd_metric": {"enum": list(METRICS)},
        "cd_K": {"type": "integer", "minimum": 1},
        "behavior_stat": {"enum": ["mean", "median"]},
        "pfm": {"type": "object", "additionalProperties": False,
                "properties": {f.name: (_INT if f.type in ("int", int) else _NUM)
                               for f in fields(PfmParams)}},
        "ncf": {"type": "object", "additionalProperties": False,
                "properties": {**{f.name: (_INT if f.type in ("int", int) else _NUM)
                                  for f in fields(NcfParams) if f.name != "hidden"},
                               "hidden": {"type": "array", "items": _INT, "minItems": 2,
                                          "maxItems": 2}}},
        "amc_alpha": {"type": "number", "minimum": 0},
        "mgm_d_max": {"type": "number", "exclusiveMinimum": 0},
        "mgm_theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "kde_floor": {"type": "number", "exclusiveMinimum": 0},
        "output_dir": {"type": "string"},
    },
    "oneOf": [{"required": ["dataset"]}, {"required": ["synthetic"]}],
}


@dataclass
class ExperimentConfig:
    models: list
    dataset: Optional[dict] = None
    synthetic: Optional[dict] = None
    name: str = "experiment"
    filter: dict = field(default_factory=lambda: {"min_user_checkins": 0, "min_poi_visitors": 0,
                                                  "fixpoint": False})
    split: list = field(default_factory=lambda: [0.7, 0.2, 0.1])
    normalization: str = "minmax"
    metrics: list = field(default_factory=lambda: list(METRICS))
    K: list = field(default_factory=lambda: [10, 20])
    seeds: list = field(default_factory=lambda: [0])
    n_test_negatives: int = 1000
    cd_metric: str = "nDCG"
    cd_K: int = 20
    behavior_stat: str = "mean"
    pfm: dict = field(default_factory=dict)
    ncf: dict = field(default_factory=dict)
    amc_alpha: float = 0.1
    mgm_d_max: float = 15.0
    mgm_theta: float = 0.02
    kde_floor: float = 0.01
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "ExperimentConfig":
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {e.message}") from None
        doc = json.loads(json.dumps(doc))
        if base_dir is not None and "dataset" in doc:
            for k, v in doc["dataset"].items():
                if v is not None and not Path(v).is_absolute():
                    doc["dataset"][k] = str(Path(base_dir) / v)
        cfg = cls(**doc)
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def fusion_configs(self) -> list:
        out = []
        for label in self.models:
            try:
                out.append(parse_label(label, self.normalization, max(self.K)).canonical())
            except ValueError as e:
                raise ConfigError(str(e)) from None
        labels = [c.label for c in out]
        dupes = sorted({x for x in labels if labels.count(x) > 1})
        if dupes:
            raise ConfigError(f"model grid names the same configuration twice: {dupes}")
        return out

    def pfm_params(self) -> PfmParams:
        return PfmParams(**self.pfm)

    def ncf_params(self) -> NcfParams:
        p = dict(self.ncf)
        if "hidden" in p:
            p["hidden"] = tuple(p["hidden"])
        return NcfParams(**p)

    def synthetic_config(self) -> SyntheticConfig:
        try:
            return SyntheticConfig.from_dict(self.synthetic or {})
        except TypeError as e:
            raise ConfigError(f"synthetic: {e}") from None

    def check(self) -> None:
        self.fusion_configs()
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")
        if self.synthetic is not None:
            self.synthetic_config()
        if self.cd_K not in self.K:
            raise ConfigError(f"cd_K={self.cd_K} is not among K={self.K}")
        if self.cd_metric not in self.metrics:
            raise ConfigError(f"cd_metric={self.cd_metric} is not among metrics={self.metrics}")
        if self.synthetic is not None and (self.synthetic or {}).get("n_categories", 10) == 0:
            self.require_categories(False)

    def require_categories(self, has_categories: bool) -> None:
        """Fail fast if a model needs POI categories the dataset lacks."""
        if has_categories:
            return
        bad = [c.label for c in self.fusion_configs() if "C" in c.contexts]
        if bad:
            raise ConfigError(f"categorical context unavailable: dataset has no POI categories "
                              f"but the grid contains {bad}")


def derive_seeds(master: int) -> dict:
    """Fan a master seed out to per-component seeds (fixed spawn order)."""
    names = ("synthetic", "test_negatives", "train_negatives", "pfm", "ncf")
    state = np.random.SeedSequence(master).generate_state(len(names), dtype=np.uint32)
    return {n: int(s) for n, s in zip(names, state)}


def fusion_for_label(cfg: ExperimentConfig) -> dict:
    return {c.label: c for c in cfg.fusion_configs()}
