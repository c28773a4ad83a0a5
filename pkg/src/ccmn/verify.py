"""Exact self-checks of the corrected losses.

Each check draws random configurations and compares a corrected loss against
an independently computed target: the expectation over the exact flip
distribution, the solution of the joint-flip linear system, or the plain loss
at zero noise. ``sign_error=True`` plants a deliberate mistake in the corrected
losses so callers can confirm the checks actually fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import correction as C
from .core import NoiseSpec, make_rng
from .noise import enumerate_flip_distribution
from .surrogate import KINDS, SurrogateLoss

TOLERANCE = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    worst: float
    tolerance: float

    def __post_init__(self):
        object.__setattr__(self, "worst", float(self.worst))

    @property
    def passed(self):
        return self.worst <= self.tolerance


def random_spec(rng, q, max_rate=0.49):
    """Valid random noise rates; each label keeps rho_pos + rho_neg < 1."""
    pos = rng.uniform(0.0, max_rate, size=q)
    neg = rng.uniform(0.0, max_rate, size=q)
    return NoiseSpec(pos, neg)


def random_labels(rng, q):
    return np.where(rng.random(q) < 0.5, 1, -1).astype(np.int8)


def _hamming_with_error(loss, f, y, spec):
    # deliberate mistake: wrong sign on the flip-compensation term
    total = 0.0
    for j in range(len(f)):
        rho = {1: spec.rho_pos[j], -1: spec.rho_neg[j]}
        t = y[j] * f[j]
        total += spec.kappa[j] * ((1 - rho[-y[j]]) * loss.value(t) + rho[y[j]] * loss.value(-t))
    return total


def _ranking_with_error(loss, f, y, spec):
    total = 0.0
    for j in range(len(f)):
        for k in range(j + 1, len(f)):
            a, b = C.pairwise_correction_table(spec, j, k).coefficients(y[j], y[k])
            d = f[j] - f[k]
            total += a * loss.value(d) - b * loss.value(-d)
    return total


def expected_over_noise(fn, loss, f, y_clean, spec):
    return sum(p * fn(loss, f, noisy, spec) for noisy, p in enumerate_flip_distribution(y_clean, spec))


def check_unbiased_hamming(trials, max_q=6, seed=0, sign_error=False, tol=TOLERANCE):
    rng = make_rng(seed, "verify-hamming")
    fn = _hamming_with_error if sign_error else C.corrected_loss_hamming
    worst = 0.0
    for t in range(trials):
        loss = SurrogateLoss(KINDS[t % len(KINDS)])
        q = int(rng.integers(1, max_q + 1))
        spec = random_spec(rng, q)
        f = rng.uniform(-3, 3, size=q)
        y = random_labels(rng, q)
        got = expected_over_noise(fn, loss, f, y, spec)
        worst = max(worst, abs(got - C.plain_loss_hamming(loss, f, y)))
    return CheckResult("unbiased_hamming", trials, worst, tol)


def check_unbiased_ranking(trials, max_q=6, seed=0, sign_error=False, tol=TOLERANCE):
    rng = make_rng(seed, "verify-ranking")
    fn = _ranking_with_error if sign_error else C.corrected_loss_ranking
    worst = 0.0
    for t in range(trials):
        loss = SurrogateLoss(KINDS[t % len(KINDS)])
        q = int(rng.integers(2, max(2, max_q) + 1))
        spec = random_spec(rng, q)
        f = rng.uniform(-3, 3, size=q)
        y = random_labels(rng, q)
        got = expected_over_noise(fn, loss, f, y, spec)
        worst = max(worst, abs(got - C.plain_loss_ranking(loss, f, y)))
    return CheckResult("unbiased_ranking", trials, worst, tol)


def check_linsolve_matches_table(trials, seed=0, sign_error=False, tol=TOLERANCE):
    rng = make_rng(seed, "verify-linsolve")
    worst = 0.0
    for t in range(trials):
        loss = SurrogateLoss(KINDS[t % len(KINDS)])
        spec = random_spec(rng, 2)
        f_jk = float(rng.uniform(-5, 5))
        table = C.pairwise_correction_table(spec, 0, 1)
        solved = C.derive_pairwise_by_linsolve(spec, 0, 1, f_jk, loss)
        for row, value in zip(C.ROWS, solved):
            a, b = table.coefficients(*row)
            if sign_error:
                b = -b
            closed = a * loss.value(f_jk) + b * loss.value(-f_jk)
            worst = max(worst, abs(closed - value))
    return CheckResult("linsolve_vs_closed_form", trials, worst, tol)


def check_zero_noise_identity(trials, max_q=6, seed=0, sign_error=False, tol=1e-12):
    rng = make_rng(seed, "verify-zero")
    ham = _hamming_with_error if sign_error else C.corrected_loss_hamming
    worst = 0.0
    for t in range(trials):
        loss = SurrogateLoss(KINDS[t % len(KINDS)])
        q = int(rng.integers(2, max(2, max_q) + 1))
        spec = NoiseSpec.zeros(q)
        f = rng.uniform(-3, 3, size=q)
        f0 = float(rng.uniform(-1, 1))
        y = random_labels(rng, q)
        got = ham(loss, f, y, spec)
        plain_h = C.plain_loss_hamming(loss, f, y)
        plain_r = C.plain_loss_ranking(loss, f, y)
        zeros = np.zeros(q)
        pairs = [
            (got, plain_h),
            (C.corrected_loss_ranking(loss, f, y, spec), plain_r),
            (C.dummy_label_loss(loss, f, f0, y, spec), C.plain_loss_hamming(loss, f - f0, y)),
            (C.upml_loss_hamming(loss, f, y, zeros), plain_h),
            (C.upml_loss_ranking(loss, f, y, zeros), plain_r),
        ]
        for a, b in pairs:
            worst = max(worst, abs(a - b))
    return CheckResult("zero_noise_identity", trials, worst, tol)


def check_upml_specialization(trials, max_q=6, seed=0, sign_error=False, tol=1e-12):
    rng = make_rng(seed, "verify-upml")
    worst = 0.0
    for t in range(trials):
        loss = SurrogateLoss(KINDS[t % len(KINDS)])
        q = int(rng.integers(2, max(2, max_q) + 1))
        rho = rng.choice((0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6), size=q) if t % 2 else rng.uniform(0, 0.6, size=q)
        spec = NoiseSpec.pml(rho)
        f = rng.uniform(-3, 3, size=q)
        y = random_labels(rng, q)
        ham = _hamming_with_error(loss, f, y, spec) if sign_error else C.corrected_loss_hamming(loss, f, y, spec)
        worst = max(worst, abs(C.upml_loss_hamming(loss, f, y, rho) - ham))
        worst = max(worst, abs(C.upml_loss_ranking(loss, f, y, rho) - C.corrected_loss_ranking(loss, f, y, spec)))
    return CheckResult("upml_specialization", trials, worst, tol)


def run_all(trials=500, max_q=6, seed=0, sign_error=False):
    return [
        check_unbiased_hamming(trials, max_q, seed, sign_error),
        check_unbiased_ranking(trials, max_q, seed, sign_error),
        check_linsolve_matches_table(max(trials, 1000), seed, sign_error),
        check_zero_noise_identity(trials, max_q, seed, sign_error),
        check_upml_specialization(trials, max_q, seed, sign_error),
    ]
