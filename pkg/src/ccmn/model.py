"""Linear and one-hidden-layer ReLU decision functions with exact gradients.

Parameters live in a plain dict of float64 arrays:

* linear: ``W`` (out, d), ``b`` (out,)
* mlp:    ``W1`` (hidden, d), ``b1`` (hidden,), ``W2`` (out, hidden), ``b2`` (out,)

Feature matrices may be dense arrays or scipy CSR matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .core import CCMNError, ShapeError, make_rng

ARCHITECTURES = ("linear", "mlp")
DEFAULT_HIDDEN = 128
CHECKPOINT_MAGIC = "#ccmn-checkpoint v1"


class EmptyBatch(CCMNError, ValueError):
    pass


@dataclass
class DecisionModel:
    architecture: str
    params: dict
    d: int
    n_outputs: int
    hidden_units: int = DEFAULT_HIDDEN
    meta: dict = field(default_factory=dict)

    def copy(self):
        return DecisionModel(
            self.architecture,
            {k: v.copy() for k, v in self.params.items()},
            self.d,
            self.n_outputs,
            self.hidden_units,
            dict(self.meta),
        )

    @property
    def weight_names(self):
        return ("W",) if self.architecture == "linear" else ("W1", "W2")

    def parameter_names(self):
        return ("W", "b") if self.architecture == "linear" else ("W1", "b1", "W2", "b2")

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.params.values())


def init_parameters(architecture, d, q, seed, hidden_units=DEFAULT_HIDDEN):
    """Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
    if architecture not in ARCHITECTURES:
        raise ValueError("unknown architecture %r" % (architecture,))
    if d < 1 or q < 1:
        raise ShapeError("d and q must be positive")
    rng = make_rng(seed, "init")

    def uniform(rows, fan_in):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=(rows, fan_in))

    if architecture == "linear":
        params = {"W": uniform(q, d), "b": np.zeros(q)}
    else:
        params = {
            "W1": uniform(hidden_units, d),
            "b1": np.zeros(hidden_units),
            "W2": uniform(q, hidden_units),
            "b2": np.zeros(q),
        }
    return DecisionModel(architecture, params, d, q, hidden_units)


def _features(model, X):
    if sparse.issparse(X):
        if X.shape[1] != model.d:
            raise ShapeError("model expects %d features, got %d" % (model.d, X.shape[1]))
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.d:
        raise ShapeError("model expects %d features, got %d" % (model.d, X.shape[1]))
    return X


def _matmul(X, W):
    out = X @ W.T
    return np.asarray(out)


def forward(model, X, return_cache=False):
    """Scores for feature rows ``X``; a 1-d ``x`` gives a 1-d result."""
    single = not sparse.issparse(X) and np.ndim(X) == 1
    X = _features(model, X)
    p = model.params
    if model.architecture == "linear":
        out = _matmul(X, p["W"]) + p["b"]
        cache = (X,)
    else:
        pre = _matmul(X, p["W1"]) + p["b1"]
        H = np.maximum(pre, 0.0)
        out = H @ p["W2"].T + p["b2"]
        cache = (X, pre, H)
    if single:
        out = out[0]
    return (out, cache) if return_cache else out


def backward(model, cache, dF):
    """Gradient of sum(dF * scores) w.r.t. every parameter."""
    p = model.params
    if model.architecture == "linear":
        (X,) = cache
        return {"W": np.asarray((X.T @ dF).T), "b": dF.sum(axis=0)}
    X, pre, H = cache
    dH = dF @ p["W2"]
    dpre = dH * (pre > 0)
    return {
        "W1": np.asarray((X.T @ dpre).T),
        "b1": dpre.sum(axis=0),
        "W2": dF.T @ H,
        "b2": dF.sum(axis=0),
    }


def loss_and_gradient(model, X, Y, objective, l2=0.0):
    """Mean objective over the batch plus l2/2 * ||weights||^2 (biases excluded)."""
    n = X.shape[0]
    if n == 0:
        raise EmptyBatch("loss_and_gradient called with an empty batch")
    if model.n_outputs != objective.n_outputs:
        raise ShapeError(
            "model has %d outputs but objective needs %d" % (model.n_outputs, objective.n_outputs)
        )
    F, cache = forward(model, X, return_cache=True)
    values, dF = objective(F, Y)
    loss = float(values.sum() / n)
    grads = backward(model, cache, dF / n)
    if l2:
        for name in model.weight_names:
            W = model.params[name]
            loss += 0.5 * l2 * float(np.sum(W * W))
            grads[name] = grads[name] + l2 * W
    return loss, grads


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model, path):
    """Write a text checkpoint: magic line, JSON meta line, then one block per tensor.

    Each block is ``tensor <name> <ndim> <dims...>`` followed by one line per
    row with values in ``%.17g`` (vectors occupy one line).
    """
    meta = {
        "architecture": model.architecture,
        "d": model.d,
        "n_outputs": model.n_outputs,
        "hidden_units": model.hidden_units,
    }
    meta.update(model.meta)
    lines = [CHECKPOINT_MAGIC, "#meta " + json.dumps(meta, sort_keys=True)]
    for name in model.parameter_names():
        a = np.asarray(model.params[name], dtype=np.float64)
        lines.append("tensor %s %d %s" % (name, a.ndim, " ".join(str(s) for s in a.shape)))
        rows = a.reshape(1, -1) if a.ndim == 1 else a
        for row in rows:
            lines.append(" ".join("%.17g" % v for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != CHECKPOINT_MAGIC or not lines[1].startswith("#meta "):
        raise ValueError("%s is not a ccmn checkpoint" % path)
    meta = json.loads(lines[1][len("#meta "):])
    params = {}
    i = 2
    while i < len(lines) and lines[i]:
        head = lines[i].split()
        if head[0] != "tensor":
            raise ValueError("%s: expected tensor header at line %d" % (path, i + 1))
        name, ndim = head[1], int(head[2])
        shape = tuple(int(s) for s in head[3:3 + ndim])
        nrows = 1 if ndim == 1 else shape[0]
        rows = [[float(v) for v in lines[i + 1 + r].split()] for r in range(nrows)]
        params[name] = np.array(rows, dtype=np.float64).reshape(shape)
        i += 1 + nrows
    arch = meta.pop("architecture")
    d = meta.pop("d")
    n_out = meta.pop("n_outputs")
    hidden = meta.pop("hidden_units")
    return DecisionModel(arch, params, d, n_out, hidden, meta)


def check_gradient(model, X, Y, objective, l2=0.0, n_coords=200, h=1e-5, seed=0):
    """Compare analytic and central-difference gradients on random coordinates.

    Returns the worst ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """
    _, grads = loss_and_gradient(model, X, Y, objective, l2)
    names = model.parameter_names()
    sizes = [model.params[k].size for k in names]
    rng = make_rng(seed, "gradcheck")
    flat = rng.choice(sum(sizes), size=min(n_coords, sum(sizes)), replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for c in flat:
        i = int(np.searchsorted(offsets, c, side="right") - 1)
        name, local = names[i], int(c - offsets[i])
        p = model.params[name].reshape(-1)
        keep = p[local]
        p[local] = keep + h
        up, _ = loss_and_gradient(model, X, Y, objective, l2)
        p[local] = keep - h
        down, _ = loss_and_gradient(model, X, Y, objective, l2)
        p[local] = keep
        numeric = (up - down) / (2 * h)
        analytic = float(grads[name].reshape(-1)[local])
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric)))
    return worst
