"""Spin-1/2 undergoing pure dephasing in a harmonic-oscillator bath.

The spin starts in ``cos(theta/2)|e> + exp(i phi) sin(theta/2)|g>`` and is
measured in the basis formed by that state and its orthogonal partner.
Only coherences decay, so both transition probabilities equal
``s = sin(theta)^2 (1 - exp(-gamma)) / 2``; ``phi`` and ``omega0`` drop out
once the free evolution is undone before each measurement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .. import bath as _bath
from ..chain import MeasurementKind, TransitionKernel
from ..errors import ValidationError


@dataclass(frozen=True)
class SingleSpinParams:
    theta: float
    phi: float = 0.0
    omega0: float = 1.0

    model_id = "single_spin"

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValidationError(f"single_spin.theta must lie in [0, pi], got {self.theta!r}")
        if not (0.0 <= self.phi < 2 * math.pi):
            raise ValidationError(f"single_spin.phi must lie in [0, 2 pi), got {self.phi!r}")
        if not math.isfinite(self.omega0):
            raise ValidationError(f"single_spin.omega0 must be finite, got {self.omega0!r}")

    def transition_kernel(self, tau, bath):
        s = single_spin_transition(self, _bath.gamma(bath, tau))
        return TransitionKernel.two_level(s, s)


def single_spin_transition(params: SingleSpinParams, gamma: float) -> float:
    if not gamma >= 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma!r}")
    return 0.5 * math.sin(params.theta) ** 2 * -math.expm1(-gamma)


def single_spin_decay_rate(params: SingleSpinParams, bath, M: int, tau: float,
                           kind=MeasurementKind.NONSELECTIVE) -> float:
    """Effective decay rate written out directly in terms of ``gamma(tau)``."""
    kind = MeasurementKind(kind)
    if int(M) != M or M < 1 or not tau > 0:
        raise ValidationError(f"need M >= 1 and tau > 0, got M={M!r}, tau={tau!r}")
    loss = -math.expm1(-_bath.gamma(bath, tau))
    sin2 = math.sin(params.theta) ** 2
    if kind is MeasurementKind.SELECTIVE:
        M = 1
    # S = 1 - (1 - (1 - 2 s)^M) / 2 with s = sin^2(theta) loss / 2
    q = sin2 * loss
    # at most 1/2, so the rate stays finite
    lost = 0.5 * (-math.expm1(M * math.log1p(-q)) if q < 1.0 else 1.0)
    return -math.log1p(-lost) / (M * tau)
