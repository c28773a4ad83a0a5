"""Minibatch Adam training with best-validation-epoch model selection."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .core import CCMNError, ShapeError, make_rng
from .metrics import hamming_loss, ranking_loss
from .model import forward, init_parameters, loss_and_gradient
from .objective import Objective, is_corrected
from .surrogate import SurrogateLoss

log = logging.getLogger(__name__)

DEFAULT_LR_GRID = (5e-2, 5e-3, 5e-4)
SELECTION_MODES = ("auto", "metric", "corrected")


class DivergedTraining(CCMNError, ArithmeticError):
    def __init__(self, epoch, step, msg=None):
        self.epoch = epoch
        self.step = step
        super().__init__(msg or "non-finite loss at epoch %d, step %d" % (epoch, step))


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "hamming-corrected"
    loss: str = "square"
    architecture: str = "linear"
    epochs: int = 200
    learning_rate: float = 5e-2
    lr_grid: Tuple[float, ...] = DEFAULT_LR_GRID
    l2: float = 1e-4
    batch_size: int = 256
    dummy_threshold: bool = False
    seed: int = 0
    hidden_units: int = 128
    clamp_bound: float = 10.0
    selection: str = "auto"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1, got %r" % (self.epochs,))
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1, got %r" % (self.batch_size,))
        if not self.learning_rate > 0 or any(not lr > 0 for lr in self.lr_grid):
            raise ValueError("learning rates must be positive")
        if self.selection not in SELECTION_MODES:
            raise ValueError("selection must be one of %s" % (SELECTION_MODES,))

    def to_dict(self):
        d = asdict(self)
        d["lr_grid"] = list(self.lr_grid)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lr_grid" in d:
            d["lr_grid"] = tuple(d["lr_grid"])
        return cls(**d)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float


@dataclass
class TrainResult:
    model: object
    config: TrainConfig
    history: List[EpochRecord]
    best_epoch: int
    best_val: float
    selection: str


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            m = self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            v = self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_objective(config, spec):
    return Objective(
        config.objective,
        SurrogateLoss(config.loss, config.clamp_bound),
        spec,
        config.dummy_threshold,
    )


def resolve_selection(config, spec):
    if config.selection != "auto":
        return config.selection
    if is_corrected(config.objective) and not spec.is_zero():
        return "corrected"
    return "metric"


def validation_score(model, objective, data, mode):
    """Lower is better: the metric of interest, or the mean corrected loss."""
    F = forward(model, data.features)
    if mode == "corrected":
        values, _ = objective(F, data.labels)
        return float(values.mean())
    if objective.ranking:
        return ranking_loss(objective.label_scores(F), data.labels)
    return hamming_loss(objective.predict(F), data.labels)


def train(train_data, val_data, config, spec, model=None):
    """Train one model at ``config.learning_rate`` and keep its best validation epoch."""
    if spec.q != train_data.q or val_data.q != train_data.q:
        raise ShapeError("noise spec and datasets disagree on the label count")
    objective = make_objective(config, spec)
    if model is None:
        model = init_parameters(
            config.architecture, train_data.d, objective.n_outputs, config.seed, config.hidden_units
        )
    else:
        model = model.copy()
    mode = resolve_selection(config, spec)
    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.eps)
    rng = make_rng(config.seed, "shuffle")
    X, Y = train_data.features, train_data.labels
    n = train_data.n
    history = []
    best, best_epoch, best_val = None, 0, np.inf
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start:start + config.batch_size]
            loss, grads = loss_and_gradient(model, X[idx], Y[idx], objective, config.l2)
            if not np.isfinite(loss):
                raise DivergedTraining(epoch, step)
            opt.step(model.params, grads)
            total += loss * len(idx)
        if not model.is_finite():
            raise DivergedTraining(epoch, step, "non-finite parameters after epoch %d" % epoch)
        val = validation_score(model, objective, val_data, mode)
        history.append(EpochRecord(epoch, total / n, val))
        if val < best_val:
            best, best_epoch, best_val = model.copy(), epoch, val
    if best is None:
        raise DivergedTraining(config.epochs, 0, "validation score never finite")
    best.meta.update(
        objective=config.objective,
        loss=config.loss,
        dummy_threshold=config.dummy_threshold,
        clamp_bound=config.clamp_bound,
        rho_pos=[float(r) for r in spec.rho_pos],
        rho_neg=[float(r) for r in spec.rho_neg],
    )
    return TrainResult(best, config, history, best_epoch, best_val, mode)


@dataclass
class GridResult:
    best: TrainResult
    runs: List[Tuple[float, Optional[TrainResult]]] = field(default_factory=list)


def grid_select(train_data, val_data, config, spec):
    """Train once per learning rate in ``config.lr_grid``; keep the best validation run.

    Ties go to the smaller learning rate. A diverged grid point is skipped
    with a warning; if every point diverges the last error is raised.
    """
    if not config.lr_grid:
        raise ValueError("empty learning-rate grid")
    runs = []
    best = None
    last_error = None
    for lr in sorted(config.lr_grid):
        try:
            res = train(train_data, val_data, replace(config, learning_rate=lr), spec)
        except DivergedTraining as exc:
            log.warning("learning rate %g diverged: %s", lr, exc)
            runs.append((lr, None))
            last_error = exc
            continue
        runs.append((lr, res))
        if best is None or res.best_val < best.best_val:
            best = res
    if best is None:
        raise last_error
    return GridResult(best, runs)


def write_history(runs, path):
    """Tab-separated log: learning_rate, epoch, train_loss, val_metric."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("learning_rate\tepoch\ttrain_loss\tval_metric\n")
        for lr, res in runs:
            if res is None:
                fh.write("%.17g\tdiverged\t\t\n" % lr)
                continue
            for rec in res.history:
                fh.write("%.17g\t%d\t%.17g\t%.17g\n" % (lr, rec.epoch, rec.train_loss, rec.val_metric))
