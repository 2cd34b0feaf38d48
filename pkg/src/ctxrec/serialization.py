"""Versioned JSON artifacts for fitted models.

Floats are written with ``repr`` precision by the json module, so a
save/load cycle reproduces every array bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

FORMAT = "ctxrec-model"
VERSION = 1

_REGISTRY: dict[str, type] = {}


def register(cls):
    """Class decorator: make ``cls`` loadable by :func:`load_model`."""
    _REGISTRY[cls.__name__] = cls
    return cls


def encode_array(a) -> dict:
    a = np.asarray(a)
    return {"dtype": str(a.dtype), "shape": list(a.shape), "data": a.ravel().tolist()}


def decode_array(d: dict) -> np.ndarray:
    a = np.array(d["data"], dtype=d["dtype"]).reshape(d["shape"])
    return a


def encode_sparse(m) -> dict:
    m = sp.csr_matrix(m)
    return {"shape": list(m.shape), "data": encode_array(m.data),
            "indices": encode_array(m.indices), "indptr": encode_array(m.indptr)}


def decode_sparse(d: dict) -> sp.csr_matrix:
    return sp.csr_matrix((decode_array(d["data"]), decode_array(d["indices"]),
                          decode_array(d["indptr"])), shape=tuple(d["shape"]))


def dumps_model(model) -> str:
    doc = {"format": FORMAT, "version": VERSION, "kind": type(model).__name__,
           "state": model.to_dict()}
    return json.dumps(doc, sort_keys=True)


def loads_model(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError("not a ctxrec model artifact")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported artifact version {doc.get('version')}")
    try:
        cls = _REGISTRY[doc["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {doc['kind']!r}") from None
    return cls.from_dict(doc["state"])


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
