"""Spin-J pure dephasing in a harmonic-oscillator bath, measured along J_x.

In the J_z eigenbasis (free evolution removed) the density matrix evolves as

    rho_lm(tau) = rho_lm(0) exp(-i delta (l^2 - m^2)) exp(-gamma (l - m)^2)

with ``gamma`` the bath dephasing factor and ``delta`` the bath-mediated
phase. For J = 1 the three J_x eigenstates give the symmetric three-level
kernel s01 = s10 = s12 = s21, s02 = s20.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import bath as _bath
from ..chain import MeasurementKind, TransitionKernel
from ..errors import InfiniteRateError, NumericalError, ValidationError

_r2 = math.sqrt(2.0)
# J = 1 eigenprojectors of J_x (eigenvalues +1, 0, -1), rows/columns ordered m = +1, 0, -1
RHO0 = np.array([[1, _r2, 1], [_r2, 2, _r2], [1, _r2, 1]]) / 4
RHO1 = np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]]) / 2
RHO2 = np.array([[1, -_r2, 1], [-_r2, 2, -_r2], [1, -_r2, 1]]) / 4

HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class LargeSpinParams:
    J: float = 1
    omega0: float = 1.0

    model_id = "large_spin"

    def __post_init__(self):
        twice = Fraction(self.J) * 2
        if twice.denominator != 1 or twice < 1:
            raise ValidationError(f"large_spin.J must be a positive multiple of 1/2, got {self.J!r}")
        if not math.isfinite(self.omega0):
            raise ValidationError("large_spin.omega0 must be finite")

    def transition_kernel(self, tau, bath):
        if self.J != 1:
            raise ValidationError("survival closed forms are only available for J = 1")
        s01, s02 = large_spin_transitions(_bath.gamma(bath, tau), _bath.delta(bath, tau))
        return TransitionKernel.symmetric_three_level(s01, s02)


def dephased_matrix_element(rho0_lm: complex, l: float, m: float, gamma: float, delta: float) -> complex:
    return rho0_lm * complex(math.cos(delta * (l * l - m * m)), -math.sin(delta * (l * l - m * m))) \
        * math.exp(-gamma * (l - m) ** 2)


def dephase(rho: np.ndarray, gamma: float, delta: float) -> np.ndarray:
    """Apply the dephasing map to a full ``(2J+1)``-square density matrix."""
    rho = np.asarray(rho)
    dim = rho.shape[0]
    J = (dim - 1) / 2
    m = J - np.arange(dim)
    l_, m_ = np.meshgrid(m, m, indexing="ij")
    factor = np.exp(-1j * delta * (l_**2 - m_**2) - gamma * (l_ - m_) ** 2)
    return rho * factor


def _check_density(rho, name):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if not np.allclose(rho, rho.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise ValidationError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValidationError(f"{name} does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValidationError(f"{name} is not positive semidefinite")
    return rho


def generic_transition(rho_a, rho_b, gamma: float, delta: float) -> float:
    """Probability of finding ``rho_b`` one interval after preparing ``rho_a``.

    ``sum_lm exp(-i delta (l^2 - m^2)) exp(-gamma (l - m)^2) [rho_a]_lm [rho_b]_ml``
    """
    a = _check_density(rho_a, "rho_a")
    b = _check_density(rho_b, "rho_b")
    if a.shape != b.shape:
        raise ValidationError("rho_a and rho_b differ in dimension")
    value = np.sum(dephase(a, gamma, delta) * b.T)
    if abs(value.imag) > IMAG_TOL:
        raise NumericalError(f"overlap has imaginary part {value.imag!r}")
    return float(value.real)


def large_spin_transitions(gamma: float, delta: float) -> tuple[float, float]:
    """``(s01, s02)`` for J = 1.

    ``s01 = (1 - e^{-4 gamma}) / 4`` and
    ``s02 = (3 + e^{-4 gamma} - 4 cos(delta) e^{-gamma}) / 8``, the latter
    regrouped so that small ``gamma`` and ``delta`` do not cancel.
    """
    if not gamma >= 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma!r}")
    s01 = -0.25 * math.expm1(-4.0 * gamma)
    s02 = 0.125 * (math.expm1(-4.0 * gamma) - 4.0 * math.expm1(-gamma)) \
        + math.exp(-gamma) * math.sin(0.5 * delta) ** 2
    return s01, max(0.0, s02)


def large_spin_decay_rate(bath, M: int, tau: float, kind=MeasurementKind.NONSELECTIVE,
                          *, uncorrected_selective: bool = False) -> float:
    """Effective decay rate of the J = 1 model written out in ``gamma`` and ``delta``.

    The selective rate uses ``s00 = 1 - s01 - s02``. ``uncorrected_selective``
    switches to the variant ``(3 + 4 e^{-4 gamma} + 4 cos(delta) e^{-gamma}) / 8``,
    which disagrees with ``s00`` (it exceeds 1 at ``gamma = delta = 0``) and
    is kept only for comparison.
    """
    kind = MeasurementKind(kind)
    if int(M) != M or M < 1 or not tau > 0:
        raise ValidationError(f"need M >= 1 and tau > 0, got M={M!r}, tau={tau!r}")
    g = _bath.gamma(bath, tau)
    d = _bath.delta(bath, tau)
    coherence = math.cos(d) * math.exp(-g)
    if kind is MeasurementKind.SELECTIVE:
        if uncorrected_selective:
            inner = (3.0 + 4.0 * math.exp(-4.0 * g) + 4.0 * coherence) / 8.0
        else:
            s01, s02 = large_spin_transitions(g, d)
            inner = 1.0 - s01 - s02
        M = 1
    else:
        inner = (2.0 + ((1.0 + 3.0 * math.exp(-4.0 * g)) / 4.0) ** M + 3.0 * coherence**M) / 6.0
    if inner <= 0.0:
        raise InfiniteRateError(f"zero survival at tau={tau!r}")
    return -math.log(inner) / (M * tau)
