"""MLP collaborative filtering (embeddings -> ReLU MLP -> sigmoid), numpy only."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..data import InteractionSamples
from ..serialization import decode_array, encode_array, register
from ..scorers.base import check_index
from .pfm import MfModel

log = logging.getLogger(__name__)

PARAM_ORDER = ("E", "Q", "W1", "b1", "W2", "b2", "W3", "b3")


@dataclass
class NcfParams:
    hidden: tuple = (128, 64)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 50
    batch_size: int = 256


class Adam:
    """Bias-corrected Adam over a dict of arrays, updated in place."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(params: dict, users, pois):
    """Returns the logits and the activations needed for backprop."""
    x = np.concatenate([params["E"][:, users].T, params["Q"][:, pois].T], axis=1)
    a1 = x @ params["W1"] + params["b1"]
    h1 = np.maximum(a1, 0.0)
    a2 = h1 @ params["W2"] + params["b2"]
    h2 = np.maximum(a2, 0.0)
    z = (h2 @ params["W3"] + params["b3"]).ravel()
    return z, (x, a1, h1, a2, h2)


def bce_loss(z, y) -> float:
    # mean of softplus(z) - y*z, which equals binary cross-entropy of sigmoid(z)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grads(params: dict, users, pois, labels):
    """Mean binary cross-entropy over the batch and its gradient for every parameter."""
    users = np.asarray(users, dtype=np.int64)
    pois = np.asarray(pois, dtype=np.int64)
    y = np.asarray(labels, dtype=np.float64)
    z, (x, a1, h1, a2, h2) = forward(params, users, pois)
    loss = bce_loss(z, y)
    dz = ((_sigmoid(z) - y) / len(y))[:, None]
    g = {"W3": h2.T @ dz, "b3": dz.sum(axis=0)}
    dh2 = dz @ params["W3"].T
    da2 = dh2 * (a2 > 0)
    g["W2"] = h1.T @ da2
    g["b2"] = da2.sum(axis=0)
    dh1 = da2 @ params["W2"].T
    da1 = dh1 * (a1 > 0)
    g["W1"] = x.T @ da1
    g["b1"] = da1.sum(axis=0)
    dx = da1 @ params["W1"].T
    K = params["E"].shape[0]
    gE = np.zeros_like(params["E"])
    gQ = np.zeros_like(params["Q"])
    np.add.at(gE.T, users, dx[:, :K])
    np.add.at(gQ.T, pois, dx[:, K:])
    g["E"], g["Q"] = gE, gQ
    return loss, g


@register
@dataclass(frozen=True, eq=False)
class NcfModel:
    params: dict
    adam_m: dict = field(default_factory=dict)
    adam_v: dict = field(default_factory=dict)
    adam_t: int = 0
    seed: int = 0
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def K(self) -> int:
        return self.params["E"].shape[0]

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def predict(self, users, pois) -> np.ndarray:
        users = np.asarray(users, dtype=np.int64)
        pois = np.asarray(pois, dtype=np.int64)
        z, _ = forward(self.params, users, pois)
        return _sigmoid(z)

    def scores(self, u: int, pois=None) -> np.ndarray:
        u = check_index(u, self.params["E"].shape[1], "user")
        n_pois = self.params["Q"].shape[1]
        pois = np.arange(n_pois) if pois is None else np.asarray(pois, dtype=np.int64)
        return self.predict(np.full(len(pois), u), pois)

    def to_dict(self) -> dict:
        enc = lambda d: {k: encode_array(v) for k, v in d.items()}
        return {"params": enc(self.params), "adam_m": enc(self.adam_m), "adam_v": enc(self.adam_v),
                "adam_t": self.adam_t, "seed": self.seed, "loss_trace": encode_array(self.loss_trace)}

    @classmethod
    def from_dict(cls, d: dict) -> "NcfModel":
        dec = lambda e: {k: decode_array(v) for k, v in e.items()}
        return cls(dec(d["params"]), dec(d["adam_m"]), dec(d["adam_v"]), d["adam_t"], d["seed"],
                   decode_array(d["loss_trace"]))


def init_params(E, Q, hidden=(128, 64), seed: int = 0) -> dict:
    """Embeddings copied from ``E``/``Q``; He-normal weights and zero biases above them."""
    rng = np.random.default_rng(seed)
    sizes = [2 * E.shape[0], *hidden, 1]
    p = {"E": np.array(E, dtype=np.float64), "Q": np.array(Q, dtype=np.float64)}
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        p[f"W{i}"] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        p[f"b{i}"] = np.zeros(n_out)
    return p


def train_ncf(samples: InteractionSamples, init: MfModel, params: NcfParams = NcfParams(),
              seed: int = 0, embedding_dim: int | None = None) -> NcfModel:
    if embedding_dim is not None and embedding_dim != init.K:
        raise ValueError(f"embedding size {embedding_dim} does not match factor size {init.K}")
    if len(params.hidden) != 2:
        raise ValueError("the network has exactly two hidden layers")
    labels = np.asarray(samples.labels)
    if len(labels) == 0 or labels.min() == labels.max():
        raise ValueError("training samples must contain both positive and negative labels")
    p = init_params(init.U, init.L, params.hidden, seed)
    opt = Adam(params.learning_rate, params.beta1, params.beta2, params.eps)
    rng = np.random.default_rng(seed + 1)
    n = len(samples)
    trace = []
    for epoch in range(params.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, params.batch_size):
            idx = order[lo:lo + params.batch_size]
            loss, g = loss_and_grads(p, samples.users[idx], samples.pois[idx], labels[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"loss diverged in epoch {epoch}")
            opt.step(p, g)
            total += loss * len(idx)
        trace.append(total / n)
    return NcfModel(p, opt.m, opt.v, opt.t, seed, np.array(trace))


def ncf_predict(m: NcfModel, u: int, l: int) -> float:
    check_index(u, m.params["E"].shape[1], "user")
    check_index(l, m.params["Q"].shape[1], "POI")
    return float(m.predict([u], [l])[0])
