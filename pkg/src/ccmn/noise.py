"""Class-conditional label flipping, its exact distribution, and rate samplers."""

from __future__ import annotations

import itertools

import numpy as np

from .core import CCMNError, NoiseSpec, ShapeError, check_labels, make_rng

CCMN_RATES = (0.1, 0.2, 0.3, 0.4, 0.5)
PML_RATES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
MAX_ENUMERATION_Q = 20


class EnumerationTooLarge(CCMNError, ValueError):
    pass


def flip_probabilities(labels, spec):
    """Per-entry flip probability for a (..., q) clean label array."""
    return np.where(labels > 0, spec.rho_pos, spec.rho_neg)


def corrupt_labels(labels, spec, seed):
    Y = check_labels(labels)
    if Y.shape[-1] != spec.q:
        raise ShapeError("noise spec covers %d labels, data has %d" % (spec.q, Y.shape[-1]))
    u = make_rng(seed, "inject-noise").random(Y.shape)
    flip = u < flip_probabilities(Y, spec)
    return np.where(flip, -Y, Y).astype(np.int8)


def inject_noise(data, spec, seed):
    """Return a copy of ``data`` with every label flipped independently."""
    return data.with_labels(corrupt_labels(data.labels, spec, seed))


def enumerate_flip_distribution(y_clean, spec):
    """All 2^q noisy label vectors with their exact probability given ``y_clean``.

    The order is ``itertools.product((1, -1), repeat=q)``.
    """
    y = check_labels(y_clean, spec.q)
    q = len(y)
    if q > MAX_ENUMERATION_Q:
        raise EnumerationTooLarge("refusing to enumerate 2^%d outcomes" % q)
    flip = flip_probabilities(y, spec)
    out = []
    for noisy in itertools.product((1, -1), repeat=q):
        noisy = np.array(noisy, dtype=np.int8)
        p = np.prod(np.where(noisy == y, 1.0 - flip, flip))
        out.append((noisy, float(p)))
    return out


def sample_noise_rates(mode, q, seed):
    """Draw a per-label NoiseSpec following the experimental protocol.

    ``ccmn`` draws both rates from CCMN_RATES and redraws any label whose
    rates sum to 1 or more. ``pml`` fixes rho_pos = 0 and draws rho_neg from
    PML_RATES.
    """
    rng = make_rng(seed, "noise-rates", mode)
    if mode == "pml":
        return NoiseSpec.pml(rng.choice(PML_RATES, size=q))
    if mode != "ccmn":
        raise ValueError("unknown noise mode %r" % (mode,))
    pos = np.empty(q)
    neg = np.empty(q)
    for j in range(q):
        while True:
            a, b = rng.choice(CCMN_RATES, size=2)
            if a + b < 1:
                break
        pos[j], neg[j] = a, b
    return NoiseSpec(pos, neg)


def write_noise_file(spec, path):
    """Sidecar format: one ``j rho_pos rho_neg`` line per label, j 1-based like dataset label indices."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j in range(spec.q):
            fh.write("%d %.17g %.17g\n" % (j + 1, spec.rho_pos[j], spec.rho_neg[j]))


def read_noise_file(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError("%s:%d: expected 'j rho_pos rho_neg'" % (path, lineno))
            try:
                rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise ValueError("%s:%d: malformed noise rate line" % (path, lineno)) from None
    rows.sort()
    if [r[0] for r in rows] != list(range(1, len(rows) + 1)):
        raise ValueError("%s: label indices must cover 1..q exactly once" % path)
    return NoiseSpec([r[1] for r in rows], [r[2] for r in rows])
