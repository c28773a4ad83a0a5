"""Convex margin losses phi(t) with exact derivatives and bounds.

Square and hinge are evaluated on t clipped to [-clamp_bound, clamp_bound];
outside that interval they are constant, so their derivative is 0 there.
This keeps both losses bounded, which the unbiasedness and bound results
require.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import CCMNError

KINDS = ("square", "hinge", "sigmoid")
DEFAULT_CLAMP = 10.0


class NonFiniteInput(CCMNError, ValueError):
    pass


def _check_finite(t):
    t = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise NonFiniteInput("surrogate loss evaluated at a non-finite margin")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class SurrogateLoss:
    kind: str = "square"
    clamp_bound: float = DEFAULT_CLAMP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown loss kind %r; expected one of %s" % (self.kind, ", ".join(KINDS)))
        if not (self.clamp_bound > 0 and np.isfinite(self.clamp_bound)):
            raise ValueError("clamp_bound must be positive and finite")

    def value(self, t):
        t = _check_finite(t)
        if self.kind == "sigmoid":
            return _out(expit(-t))
        c = np.clip(t, -self.clamp_bound, self.clamp_bound)
        if self.kind == "square":
            return _out((1.0 - c) ** 2)
        return _out(np.maximum(0.0, 1.0 - c))

    def derivative(self, t):
        t = _check_finite(t)
        if self.kind == "sigmoid":
            s = expit(t)
            return _out(-s * (1.0 - s))
        inside = np.abs(t) <= self.clamp_bound
        if self.kind == "square":
            return _out(np.where(inside, -2.0 * (1.0 - t), 0.0))
        # subgradient 0 at the kink t == 1
        return _out(np.where(inside & (t < 1.0), -1.0, 0.0))

    def bound(self):
        """Supremum of phi over the clamped domain."""
        if self.kind == "square":
            return (1.0 + self.clamp_bound) ** 2
        if self.kind == "hinge":
            return 1.0 + self.clamp_bound
        return 1.0

    def lipschitz(self):
        """Lipschitz constant of phi itself on the clamped domain."""
        if self.kind == "square":
            return 2.0 * (1.0 + self.clamp_bound)
        if self.kind == "hinge":
            return 1.0
        return 0.25


def phi_value(loss, t):
    return loss.value(t)


def phi_derivative(loss, t):
    return loss.derivative(t)


def phi_bound(loss):
    return loss.bound()


def get_loss(kind, clamp_bound=DEFAULT_CLAMP):
    return SurrogateLoss(kind, clamp_bound)
