"""Training objectives: which corrected (or plain) loss a model minimizes.

An :class:`Objective` maps an (n, q) or (n, q+1) score matrix and noisy
labels to per-instance losses and their gradient with respect to the scores.
With ``dummy_threshold`` the last score column is the dummy label's score and
the dummy-label term is added with unit weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import correction as C
from .core import InvalidNoiseSpec, NoiseSpec, ShapeError
from .metrics import predict_dummy_threshold, predict_sign
from .surrogate import SurrogateLoss

OBJECTIVES = (
    "hamming-corrected",
    "ranking-corrected",
    "hamming-plain",
    "ranking-plain",
    "upml-hamming",
    "upml-ranking",
)


def is_ranking(name):
    return name in ("ranking-corrected", "ranking-plain", "upml-ranking")


def is_corrected(name):
    return not name.endswith("-plain")


@dataclass
class Objective:
    name: str
    loss: SurrogateLoss
    spec: NoiseSpec
    dummy_threshold: bool = False
    _pairs: object = field(default=None, init=False, repr=False)
    _coefs: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.name not in OBJECTIVES:
            raise ValueError("unknown objective %r" % (self.name,))
        if self.dummy_threshold and not is_ranking(self.name):
            raise ValueError("dummy threshold applies only to ranking objectives")
        if self.name.startswith("upml") and np.any(self.spec.rho_pos):
            raise InvalidNoiseSpec("uPML objectives require rho_pos = 0 for every label")
        q = self.spec.q
        if is_ranking(self.name):
            if q < 2:
                raise ShapeError("ranking objectives need q >= 2")
            self._pairs = C.PairIndex(q)
            if self.name == "ranking-corrected":
                self._coefs = C.pairwise_coefficient_arrays(self.spec, self._pairs)

    @property
    def q(self):
        return self.spec.q

    @property
    def n_outputs(self):
        return self.q + 1 if self.dummy_threshold else self.q

    @property
    def ranking(self):
        return is_ranking(self.name)

    def _hamming_term(self, F, Y):
        if self.name.endswith("-plain"):
            return C.hamming_plain_batch(self.loss, F, Y)
        if self.name.startswith("upml"):
            return C.upml_hamming_batch(self.loss, F, Y, self.spec.rho_neg)
        return C.hamming_corrected_batch(self.loss, F, Y, self.spec)

    def __call__(self, F, Y):
        """Return (per-instance loss, dloss/dF) for scores ``F`` and labels ``Y``."""
        F = np.asarray(F, dtype=np.float64)
        if F.ndim != 2 or F.shape[1] != self.n_outputs or Y.shape != (F.shape[0], self.q):
            raise ShapeError(
                "objective expects scores (n, %d) and labels (n, %d); got %r and %r"
                % (self.n_outputs, self.q, F.shape, Y.shape)
            )
        q = self.q
        S = F[:, :q]
        if self.name == "ranking-plain":
            value, grad = C.ranking_plain_batch(self.loss, S, Y, self._pairs)
        elif self.name == "ranking-corrected":
            value, grad = C.ranking_corrected_batch(self.loss, S, Y, self._pairs, self._coefs)
        elif self.name == "upml-ranking":
            value, grad = C.upml_ranking_batch(self.loss, S, Y, self._pairs, self.spec.rho_neg)
        else:
            value, grad = self._hamming_term(S, Y)
        if not self.dummy_threshold:
            return value, grad
        v0, g0 = self._hamming_term(S - F[:, q:], Y)
        dF = np.empty_like(F)
        dF[:, :q] = grad + g0
        dF[:, q] = -g0.sum(axis=1)
        return value + v0, dF

    def predict(self, F):
        F = np.asarray(F, dtype=np.float64)
        if self.dummy_threshold:
            return predict_dummy_threshold(F[:, : self.q], F[:, self.q])
        return predict_sign(F[:, : self.q])

    def label_scores(self, F):
        return np.asarray(F)[:, : self.q]
