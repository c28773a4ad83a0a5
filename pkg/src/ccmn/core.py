"""Shared domain types: label matrices, noise specifications, datasets, splits.

Labels are always stored as +1/-1 integers. Every stochastic routine in the
package draws from :func:`make_rng`, which pins the bit generator to Philox
(a counter-based generator) seeded through ``SeedSequence`` so that a given
seed and call sequence produce the same stream on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

RNG_ALGORITHM = "philox4x64-10/seedsequence"


class CCMNError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(CCMNError, ValueError):
    pass


class InvalidNoiseSpec(CCMNError, ValueError):
    pass


class InvalidSplit(CCMNError, ValueError):
    pass


class InvalidLabels(CCMNError, ValueError):
    pass


def make_rng(seed, *stream):
    """Return a Philox-backed generator for ``seed`` and an optional stream key.

    ``stream`` entries must be non-negative ints or strings; strings are
    folded into ints so that independent consumers (shuffling, init, noise)
    never share a stream.
    """
    if seed is None or int(seed) < 0:
        raise ValueError("seed must be a non-negative integer, got %r" % (seed,))
    key = [int(seed)]
    for s in stream:
        if isinstance(s, str):
            key.append(int.from_bytes(s.encode("utf-8"), "little") % (2**63))
        else:
            key.append(int(s))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def check_labels(labels, q=None):
    """Validate a +/-1 label vector or matrix and return it as an int8 array."""
    arr = np.asarray(labels)
    if arr.size and not np.all((arr == 1) | (arr == -1)):
        raise InvalidLabels("labels must be exactly -1 or +1")
    if q is not None and arr.shape[-1] != q:
        raise ShapeError("expected %d labels, got %d" % (q, arr.shape[-1]))
    return arr.astype(np.int8)


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NoiseSpec:
    """Per-label flip probabilities.

    ``rho_pos[j]`` is Pr(noisy_j = -1 | clean_j = +1) and ``rho_neg[j]`` is
    Pr(noisy_j = +1 | clean_j = -1).
    """

    rho_pos: np.ndarray
    rho_neg: np.ndarray

    def __post_init__(self):
        pos = _frozen(np.atleast_1d(self.rho_pos))
        neg = _frozen(np.atleast_1d(self.rho_neg))
        if pos.ndim != 1 or pos.shape != neg.shape:
            raise InvalidNoiseSpec("rho_pos and rho_neg must be 1-d and the same length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            raise InvalidNoiseSpec("noise rates must be finite")
        if np.any(pos < 0) or np.any(neg < 0) or np.any(pos >= 1) or np.any(neg >= 1):
            raise InvalidNoiseSpec("noise rates must lie in [0, 1)")
        bad = np.flatnonzero(pos + neg >= 1)
        if bad.size:
            j = int(bad[0])
            raise InvalidNoiseSpec(
                "label %d: rho_pos + rho_neg = %r must be < 1" % (j, float(pos[j] + neg[j]))
            )
        object.__setattr__(self, "rho_pos", pos)
        object.__setattr__(self, "rho_neg", neg)

    @property
    def q(self):
        return self.rho_pos.shape[0]

    @property
    def kappa(self):
        """1 / (1 - rho_pos - rho_neg) for every label."""
        return 1.0 / (1.0 - self.rho_pos - self.rho_neg)

    def is_zero(self):
        return not (np.any(self.rho_pos) or np.any(self.rho_neg))

    @classmethod
    def zeros(cls, q):
        return cls(np.zeros(q), np.zeros(q))

    @classmethod
    def uniform(cls, q, rho_pos, rho_neg):
        return cls(np.full(q, float(rho_pos)), np.full(q, float(rho_neg)))

    @classmethod
    def pml(cls, rho):
        """Partial multi-label noise: only negatives flip, with rates ``rho``."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return cls(np.zeros_like(rho), rho)

    def __eq__(self, other):
        if not isinstance(other, NoiseSpec):
            return NotImplemented
        return np.array_equal(self.rho_pos, other.rho_pos) and np.array_equal(
            self.rho_neg, other.rho_neg
        )

    def __hash__(self):
        return hash((self.rho_pos.tobytes(), self.rho_neg.tobytes()))


@dataclass(frozen=True, eq=False)
class MultiLabelDataset:
    """Feature rows (dense ndarray or CSR matrix) paired with +/-1 labels."""

    features: object
    labels: np.ndarray
    names: Optional[Sequence[str]] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = self.features
        if sparse.issparse(X):
            X = sparse.csr_matrix(X, dtype=np.float64)
            X.sort_indices()
            for a in (X.data, X.indices, X.indptr):
                a.setflags(write=False)
        else:
            X = _frozen(X)
            if X.ndim != 2:
                raise ShapeError("features must be a 2-d array")
        Y = np.array(self.labels, copy=True)
        if Y.ndim != 2:
            raise ShapeError("labels must be an (n, q) array")
        Y = check_labels(Y)
        Y.setflags(write=False)
        if X.shape[0] != Y.shape[0]:
            raise ShapeError(
                "feature rows (%d) and label rows (%d) differ" % (X.shape[0], Y.shape[0])
            )
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != Y.shape[1]:
                raise ShapeError("got %d label names for %d labels" % (len(names), Y.shape[1]))
            object.__setattr__(self, "names", names)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def q(self):
        return self.labels.shape[1]

    @property
    def is_sparse(self):
        return sparse.issparse(self.features)

    def dense_features(self):
        if self.is_sparse:
            return self.features.toarray()
        return self.features

    def subset(self, index):
        index = np.asarray(index, dtype=np.intp)
        return MultiLabelDataset(self.features[index], self.labels[index], self.names, self.metadata)

    def with_labels(self, labels):
        return MultiLabelDataset(self.features, labels, self.names, self.metadata)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    test_fraction: float = 0.3
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.test_fraction, self.validation_fraction)
        if any(not (f > 0) for f in fr):
            raise InvalidSplit("split fractions must be positive, got %r" % (fr,))
        if abs(math.fsum(fr) - 1.0) > 1e-12:
            raise InvalidSplit("split fractions must sum to 1, got %r" % (math.fsum(fr),))

    def sizes(self, n):
        # the epsilon guards against products like 0.3 * 10 = 2.9999...
        test = math.floor(self.test_fraction * n + 1e-9)
        val = math.floor(self.validation_fraction * n + 1e-9)
        train = n - test - val
        return train, test, val


def split_indices(n, spec):
    """Return (train, test, validation) index arrays for ``n`` rows."""
    if n < 3:
        raise InvalidSplit("need at least 3 rows to split, got %d" % n)
    n_train, n_test, n_val = spec.sizes(n)
    if min(n_train, n_test, n_val) <= 0 or math.floor(spec.train_fraction * n + 1e-9) == 0:
        raise InvalidSplit("split of %d rows leaves an empty partition: %r" % (n, (n_train, n_test, n_val)))
    perm = make_rng(spec.seed, "split").permutation(n)
    return (
        np.sort(perm[:n_train]),
        np.sort(perm[n_train:n_train + n_test]),
        np.sort(perm[n_train + n_test:]),
    )


def split_dataset(data, spec):
    """Split ``data`` into (train, test, validation) datasets per ``spec``."""
    tr, te, va = split_indices(data.n, spec)
    return data.subset(tr), data.subset(te), data.subset(va)
