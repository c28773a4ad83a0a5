"""Noise-corrected surrogate losses.

Scalar functions mirror the per-instance definitions and are the readable
reference. The ``*_batch`` kernels evaluate an (n, q) score matrix at once and
also return d(loss)/d(scores); the trainer uses only those.

Pairwise tables are indexed by the *observed* label pair (y_j, y_k) and give
the coefficients applied to phi(f_j - f_k) and phi(f_k - f_j).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import CCMNError, InvalidNoiseSpec, NoiseSpec, ShapeError, check_labels

ROWS = ((1, -1), (-1, 1), (1, 1), (-1, -1))


class InvalidPair(CCMNError, ValueError):
    pass


class SingularSystem(CCMNError, ArithmeticError):
    pass


def _rates(rho_pos, rho_neg):
    if not (0 <= rho_pos < 1 and 0 <= rho_neg < 1 and rho_pos + rho_neg < 1):
        raise InvalidNoiseSpec("invalid noise rates (%r, %r)" % (rho_pos, rho_neg))
    return {1: float(rho_pos), -1: float(rho_neg)}


def corrected_phi_independent(loss, f_j, y_j, rho_pos_j, rho_neg_j):
    """Corrected per-label loss for an observed label ``y_j``; may be negative."""
    rho = _rates(rho_pos_j, rho_neg_j)
    y = int(y_j)
    if y not in (1, -1):
        raise ValueError("label must be +1 or -1")
    kappa = 1.0 / (1.0 - rho[1] - rho[-1])
    t = y * f_j
    return kappa * ((1.0 - rho[-y]) * loss.value(t) - rho[y] * loss.value(-t))


def _vectors(f, y, q=None):
    f = np.asarray(f, dtype=np.float64)
    y = check_labels(y)
    if f.ndim != 1 or y.ndim != 1 or f.shape != y.shape:
        raise ShapeError("score and label vectors must be 1-d with equal length")
    if q is not None and f.shape[0] != q:
        raise ShapeError("noise spec covers %d labels, got %d" % (q, f.shape[0]))
    return f, y


def plain_loss_hamming(loss, f, y):
    f, y = _vectors(f, y)
    return float(sum(loss.value(y[j] * f[j]) for j in range(len(f))))


def plain_loss_ranking(loss, f, y):
    """Pairwise surrogate on clean labels; pairs with equal labels contribute 0."""
    f, y = _vectors(f, y)
    if len(f) < 2:
        raise ShapeError("ranking loss needs at least 2 labels")
    total = 0.0
    for j in range(len(f)):
        for k in range(j + 1, len(f)):
            if y[j] != y[k]:
                total += loss.value((y[j] - y[k]) / 2 * (f[j] - f[k]))
    return total


def corrected_loss_hamming(loss, f, y_noisy, spec):
    f, y = _vectors(f, y_noisy, spec.q)
    return float(
        sum(
            corrected_phi_independent(loss, f[j], y[j], spec.rho_pos[j], spec.rho_neg[j])
            for j in range(len(f))
        )
    )


@dataclass(frozen=True)
class PairwiseCorrectionTable:
    """Coefficients (on phi(f_jk), on phi(-f_jk)) per observed pair, kappa included."""

    j: int
    k: int
    kappa: float
    rows: dict

    def coefficients(self, y_j, y_k):
        return self.rows[(int(y_j), int(y_k))]

    def unscaled(self, y_j, y_k):
        a, b = self.rows[(int(y_j), int(y_k))]
        return a / self.kappa, b / self.kappa


def pairwise_correction_table(spec, j, k):
    if j == k:
        raise InvalidPair("pair needs two distinct labels, got j = k = %d" % j)
    if not (0 <= j < spec.q and 0 <= k < spec.q):
        raise InvalidPair("label index out of range for q=%d: (%d, %d)" % (spec.q, j, k))
    pj, nj = float(spec.rho_pos[j]), float(spec.rho_neg[j])
    pk, nk = float(spec.rho_pos[k]), float(spec.rho_neg[k])
    kappa = 1.0 / ((1.0 - pj - nj) * (1.0 - pk - nk))
    rows = {
        (1, -1): (kappa * (1 - nj) * (1 - pk), kappa * pj * nk),
        (-1, 1): (kappa * nj * pk, kappa * (1 - pj) * (1 - nk)),
        (1, 1): (-kappa * pk * (1 - nj), -kappa * pj * (1 - nk)),
        (-1, -1): (-kappa * nj * (1 - pk), -kappa * nk * (1 - pj)),
    }
    return PairwiseCorrectionTable(j, k, kappa, rows)


def solve_partial_pivot(A, b):
    """Solve A x = b by Gaussian elimination with partial (row) pivoting."""
    A = np.array(A, dtype=np.float64)
    x = np.array(b, dtype=np.float64)
    n = len(x)
    scale = np.max(np.abs(A)) or 1.0
    for col in range(n):
        p = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[p, col]) <= 1e-14 * scale:
            raise SingularSystem("matrix is singular to working precision")
        if p != col:
            A[[col, p]] = A[[p, col]]
            x[[col, p]] = x[[p, col]]
        for r in range(col + 1, n):
            m = A[r, col] / A[col, col]
            if m != 0.0:
                A[r, col:] -= m * A[col, col:]
                x[r] -= m * x[col]
    for r in range(n - 1, -1, -1):
        x[r] = (x[r] - A[r, r + 1:] @ x[r + 1:]) / A[r, r]
    return x


def joint_flip_matrix(spec, j, k):
    """4x4 matrix of Pr(noisy pair | clean pair); rows and columns ordered as ROWS."""
    def pr(noisy, clean, idx):
        flip = spec.rho_pos[idx] if clean == 1 else spec.rho_neg[idx]
        return flip if noisy != clean else 1.0 - flip

    M = np.empty((4, 4))
    for r, (cj, ck) in enumerate(ROWS):
        for c, (tj, tk) in enumerate(ROWS):
            M[r, c] = pr(tj, cj, j) * pr(tk, ck, k)
    return M


def derive_pairwise_by_linsolve(spec, j, k, f_jk, loss, equal_target=0.0):
    """Corrected pair values obtained by inverting the joint flip process.

    Returns the four values for observed pairs ordered as ``ROWS``. The
    right-hand side is the clean pairwise loss: phi(f_jk), phi(-f_jk) for
    unequal pairs and ``equal_target`` for equal ones (0 under the indicator
    form of the ranking surrogate).
    """
    if j == k:
        raise InvalidPair("pair needs two distinct labels, got j = k = %d" % j)
    M = joint_flip_matrix(spec, j, k)
    rhs = [loss.value(f_jk), loss.value(-f_jk), equal_target, equal_target]
    return tuple(float(v) for v in solve_partial_pivot(M, rhs))


def corrected_loss_ranking(loss, f, y_noisy, spec):
    f, y = _vectors(f, y_noisy, spec.q)
    if len(f) < 2:
        raise ShapeError("ranking loss needs at least 2 labels")
    total = 0.0
    for j in range(len(f)):
        for k in range(j + 1, len(f)):
            a, b = pairwise_correction_table(spec, j, k).coefficients(y[j], y[k])
            d = f[j] - f[k]
            total += a * loss.value(d) + b * loss.value(-d)
    return total


def dummy_label_loss(loss, f, f0, y_noisy, spec):
    """Corrected loss of each label score against the dummy threshold score ``f0``."""
    f, _ = _vectors(f, y_noisy, spec.q)
    return corrected_loss_hamming(loss, f - float(f0), y_noisy, spec)


def _pml_rates(rho, q):
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    if rho.shape != (q,):
        raise ShapeError("expected %d noise rates, got shape %r" % (q, rho.shape))
    if np.any(rho < 0) or np.any(rho >= 1) or not np.all(np.isfinite(rho)):
        raise InvalidNoiseSpec("partial-label noise rates must lie in [0, 1)")
    return rho


def upml_loss_hamming(loss, f, y_noisy, rho):
    f, y = _vectors(f, y_noisy)
    rho = _pml_rates(rho, len(f))
    total = 0.0
    for j in range(len(f)):
        if y[j] == 1:
            total += loss.value(f[j])
        else:
            total += (loss.value(-f[j]) - rho[j] * loss.value(f[j])) / (1.0 - rho[j])
    return total


def upml_loss_ranking(loss, f, y_noisy, rho):
    f, y = _vectors(f, y_noisy)
    if len(f) < 2:
        raise ShapeError("ranking loss needs at least 2 labels")
    rho = _pml_rates(rho, len(f))
    total = 0.0
    for j in range(len(f)):
        for k in range(j + 1, len(f)):
            d = f[j] - f[k]
            if y[j] == 1 and y[k] == -1:
                total += loss.value(d) / (1.0 - rho[k])
            elif y[j] == -1 and y[k] == 1:
                total += loss.value(-d) / (1.0 - rho[j])
            elif y[j] == -1:
                total += (-rho[j] * loss.value(d) - rho[k] * loss.value(-d)) / (
                    (1.0 - rho[j]) * (1.0 - rho[k])
                )
    return total


class BoundConstants(NamedTuple):
    mu_independent: float
    mu_dependent: float
    kappa_max: float


def compute_bound_constants(spec):
    gap = 1.0 - spec.rho_pos - spec.rho_neg
    kappa = 1.0 / gap
    mu_dep = (1.0 + np.abs(spec.rho_neg - spec.rho_pos)) / gap**2
    return BoundConstants(float(np.max(kappa)), float(np.max(mu_dep)), float(np.max(kappa)))


# ---------------------------------------------------------------------------
# batched kernels: F is (n, q) scores, Y is (n, q) labels in {-1, +1}.
# Each returns (per-instance loss of shape (n,), dloss/dF of shape (n, q)).


def hamming_plain_batch(loss, F, Y):
    T = Y * F
    return loss.value(T).sum(axis=1), Y * loss.derivative(T)


def hamming_coefficients(spec, Y):
    """Per-entry (a, b) so that the corrected loss is a*phi(yf) - b*phi(-yf)."""
    pos = Y > 0
    kappa = spec.kappa
    a = kappa * np.where(pos, 1.0 - spec.rho_neg, 1.0 - spec.rho_pos)
    b = kappa * np.where(pos, spec.rho_pos, spec.rho_neg)
    return a, b


def hamming_corrected_batch(loss, F, Y, spec):
    a, b = hamming_coefficients(spec, Y)
    T = Y * F
    value = a * loss.value(T) - b * loss.value(-T)
    grad = Y * (a * loss.derivative(T) + b * loss.derivative(-T))
    return value.sum(axis=1), grad


def upml_hamming_batch(loss, F, Y, rho):
    pos = Y > 0
    inv = 1.0 / (1.0 - rho)
    value = np.where(pos, loss.value(F), (loss.value(-F) - rho * loss.value(F)) * inv)
    grad = np.where(pos, loss.derivative(F), (-loss.derivative(-F) - rho * loss.derivative(F)) * inv)
    return value.sum(axis=1), grad


class PairIndex:
    """Upper-triangular label pairs and the (P, q) incidence matrix used for scatter."""

    def __init__(self, q):
        self.q = q
        self.j, self.k = np.triu_indices(q, 1)
        P = len(self.j)
        S = np.zeros((P, q))
        S[np.arange(P), self.j] = 1.0
        S[np.arange(P), self.k] = -1.0
        self.incidence = S

    def differences(self, F):
        return F[:, self.j] - F[:, self.k]


def ranking_plain_batch(loss, F, Y, pairs):
    D = pairs.differences(F)
    sign = (Y[:, pairs.j] - Y[:, pairs.k]) / 2
    active = sign != 0
    T = sign * D
    value = np.where(active, loss.value(T), 0.0)
    G = np.where(active, sign * loss.derivative(T), 0.0)
    return value.sum(axis=1), G @ pairs.incidence


def pairwise_coefficient_arrays(spec, pairs):
    """Arrays of shape (P, 2, 2) indexed by [pair, y_j > 0, y_k > 0]."""
    P = len(pairs.j)
    A = np.empty((P, 2, 2))
    B = np.empty((P, 2, 2))
    for p, (j, k) in enumerate(zip(pairs.j, pairs.k)):
        table = pairwise_correction_table(spec, int(j), int(k))
        for (yj, yk), (a, b) in table.rows.items():
            A[p, int(yj > 0), int(yk > 0)] = a
            B[p, int(yj > 0), int(yk > 0)] = b
    return A, B


def ranking_corrected_batch(loss, F, Y, pairs, coefs):
    A, B = coefs
    pj = (Y[:, pairs.j] > 0).astype(np.intp)
    pk = (Y[:, pairs.k] > 0).astype(np.intp)
    idx = np.arange(len(pairs.j))
    a = A[idx, pj, pk]
    b = B[idx, pj, pk]
    D = pairs.differences(F)
    value = a * loss.value(D) + b * loss.value(-D)
    G = a * loss.derivative(D) - b * loss.derivative(-D)
    return value.sum(axis=1), G @ pairs.incidence


def upml_ranking_batch(loss, F, Y, pairs, rho):
    yj = Y[:, pairs.j]
    yk = Y[:, pairs.k]
    rj = rho[pairs.j]
    rk = rho[pairs.k]
    D = pairs.differences(F)
    vp, vm = loss.value(D), loss.value(-D)
    dp, dm = loss.derivative(D), loss.derivative(-D)
    pm = (yj > 0) & (yk < 0)
    mp = (yj < 0) & (yk > 0)
    mm = (yj < 0) & (yk < 0)
    denom = (1.0 - rj) * (1.0 - rk)
    value = np.where(pm, vp / (1.0 - rk), 0.0)
    value = np.where(mp, vm / (1.0 - rj), value)
    value = np.where(mm, (-rj * vp - rk * vm) / denom, value)
    G = np.where(pm, dp / (1.0 - rk), 0.0)
    G = np.where(mp, -dm / (1.0 - rj), G)
    G = np.where(mm, (-rj * dp + rk * dm) / denom, G)
    return value.sum(axis=1), G @ pairs.incidence
