"""Split / corrupt / train / evaluate pipeline and repeated-seed aggregation."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import NoiseSpec, SplitSpec, split_dataset
from .correction import compute_bound_constants
from .metrics import METRIC_NAMES, evaluate_scores
from .model import forward
from .noise import inject_noise, sample_noise_rates
from .objective import Objective
from .surrogate import SurrogateLoss
from .trainer import grid_select, train


def evaluate_model(model, data):
    """Metrics of ``model`` on ``data`` using the prediction rule stored in its meta."""
    meta = model.meta
    objective = Objective(
        meta.get("objective", "hamming-corrected"),
        SurrogateLoss(meta.get("loss", "square"), meta.get("clamp_bound", 10.0)),
        NoiseSpec.zeros(data.q),
        bool(meta.get("dummy_threshold", False)),
    )
    F = forward(model, data.features)
    return evaluate_scores(objective.label_scores(F), data.labels, objective.predict(F))


def resolve_spec(noise, q, seed):
    if isinstance(noise, NoiseSpec):
        return noise
    if noise in (None, "none", "zero"):
        return NoiseSpec.zeros(q)
    return sample_noise_rates(noise, q, seed)


def run_once(data, config, noise, seed, split=None, use_grid=True):
    """One repetition: split with ``seed``, corrupt train+validation, train, score on clean test.

    ``noise`` is a NoiseSpec, a sampling mode ('ccmn' / 'pml'), or None for
    clean training. The learner is given the true noise rates.
    """
    split = split or SplitSpec(seed=seed)
    if split.seed != seed:
        split = replace(split, seed=seed)
    train_set, test_set, val_set = split_dataset(data, split)
    spec = resolve_spec(noise, data.q, seed)
    if not spec.is_zero():
        train_set = inject_noise(train_set, spec, seed)
        val_set = inject_noise(val_set, spec, seed + 1_000_003)
    cfg = replace(config, seed=seed)
    if use_grid:
        result = grid_select(train_set, val_set, cfg, spec).best
    else:
        result = train(train_set, val_set, cfg, spec)
    metrics = evaluate_model(result.model, test_set)
    return {
        "seed": seed,
        "metrics": metrics,
        "learning_rate": result.config.learning_rate,
        "best_epoch": result.best_epoch,
        "spec": spec,
    }


def aggregate(runs):
    out = {}
    for name in METRIC_NAMES:
        vals = np.array([r["metrics"][name] for r in runs])
        out[name] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=0)), "values": vals.tolist()}
    return out


def run_experiment(data, config, noise, seeds=range(5), split=None, use_grid=True):
    runs = [run_once(data, config, noise, s, split, use_grid) for s in seeds]
    report = {"runs": runs, "summary": aggregate(runs)}
    report["bounds"] = [compute_bound_constants(r["spec"])._asdict() for r in runs]
    return report
