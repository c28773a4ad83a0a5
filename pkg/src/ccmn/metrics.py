"""Evaluation metrics and test-time prediction rules.

All metrics take (n, q) arrays. Scores ``F`` are real; labels are +/-1.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import ShapeError, check_labels

METRIC_NAMES = ("hamming_loss", "ranking_loss", "average_precision")


def predict_sign(F):
    """+1 where the score is >= 0, else -1."""
    return np.where(np.asarray(F) >= 0, 1, -1).astype(np.int8)


def predict_dummy_threshold(F, f0):
    """+1 where the label score reaches the instance's dummy score ``f0``."""
    F = np.asarray(F, dtype=np.float64)
    f0 = np.asarray(f0, dtype=np.float64)
    if F.ndim == 2:
        f0 = f0.reshape(-1, 1)
    return np.where(F >= f0, 1, -1).astype(np.int8)


def _pair(a, b):
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape != b.shape:
        raise ShapeError("shape mismatch: %r vs %r" % (a.shape, b.shape))
    return a, b


def hamming_loss(pred, truth):
    pred, truth = _pair(check_labels(pred), check_labels(truth))
    if pred.size == 0:
        return 0.0
    return float(np.mean(pred != truth))


def ranking_loss(F, truth, normalize=True):
    """Fraction of (relevant, irrelevant) pairs ordered wrongly, ties counting 1/2.

    Instances that are all-relevant or all-irrelevant are skipped. With
    ``normalize=False`` the per-instance count is not divided by the number
    of pairs (the instances are still averaged).
    """
    F, Y = _pair(np.asarray(F, dtype=np.float64), check_labels(truth))
    j, k = np.triu_indices(F.shape[1], 1)
    # orient every pair as (relevant - irrelevant); equal-label pairs drop out
    sign = (Y[:, j].astype(np.int64) - Y[:, k]) // 2
    diff = sign * (F[:, j] - F[:, k])
    active = sign != 0
    count = np.sum(active & (diff < 0), axis=1) + 0.5 * np.sum(active & (diff == 0), axis=1)
    npos = np.sum(Y > 0, axis=1)
    pairs = npos * (Y.shape[1] - npos)
    keep = pairs > 0
    if not keep.any():
        return 0.0
    losses = count[keep] / pairs[keep] if normalize else count[keep]
    return float(np.mean(losses))


def ranking_loss_sorted(F, truth, normalize=True):
    """Same value as :func:`ranking_loss`, counted by sorting instead of a pair scan."""
    F, Y = _pair(np.asarray(F, dtype=np.float64), check_labels(truth))
    losses = []
    for f, y in zip(F, Y):
        rel = f[y > 0]
        irr = np.sort(f[y < 0])
        if rel.size == 0 or irr.size == 0:
            continue
        above = irr.size - np.searchsorted(irr, rel, side="right")
        ties = np.searchsorted(irr, rel, side="right") - np.searchsorted(irr, rel, side="left")
        # integer twice-count keeps the result exact before the final division
        twice = int(2 * above.sum() + ties.sum())
        count = twice / 2
        losses.append(count / (rel.size * irr.size) if normalize else count)
    return float(np.mean(np.array(losses))) if losses else 0.0


class APResult(NamedTuple):
    value: float
    skipped: int


def average_precision_detail(F, truth):
    F, Y = _pair(np.asarray(F, dtype=np.float64), check_labels(truth))
    scores = []
    skipped = 0
    for f, y in zip(F, Y):
        relevant = y > 0
        if not relevant.any():
            skipped += 1
            continue
        # stable sort on -f: ties keep ascending label index
        order = np.argsort(-f, kind="stable")
        rank = np.empty(len(f), dtype=np.intp)
        rank[order] = np.arange(1, len(f) + 1)
        rel_ranks = np.sort(rank[relevant])
        precision = np.arange(1, rel_ranks.size + 1) / rel_ranks
        scores.append(precision.mean())
    value = float(np.mean(scores)) if scores else 0.0
    return APResult(value, skipped)


def average_precision(F, truth):
    return average_precision_detail(F, truth).value


def evaluate_scores(F, truth, pred):
    """All three metrics; ``pred`` is the +/-1 prediction used for hamming loss."""
    return {
        "hamming_loss": hamming_loss(pred, truth),
        "ranking_loss": ranking_loss(F, truth),
        "average_precision": average_precision(F, truth),
    }
