"""Central spin coupled to a bath of N spins through ``sigma_z sigma_z^(i)``.

The bath operators commute with the total Hamiltonian, so every bath
configuration ``n`` contributes an independent central-spin rotation with
frequency ``Omega_n = sqrt(zeta_n^2 + Delta^2) / 2`` where
``zeta_n = epsilon + G_n``. Configurations are weighted by the thermal factor
``c_n = exp(-beta eta_n / 2)``. For N = 100 and beta = 10 those weights span
``exp(+-500)``, so they are kept as logarithms and normalised with a max shift.

The central spin starts in ``(1 + sigma_x)/2`` and is measured in the
``sigma_x`` basis; both transition probabilities share one formula.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from ..chain import MeasurementKind, TransitionKernel
from ..errors import CapacityError, InfiniteRateError, NumericalError, ValidationError

MAX_ENUMERATION_N = 14
RANGE_TOL = 1e-10

Couplings = Union[float, Sequence[float]]


@dataclass(frozen=True)
class SpinBathParams:
    """Scalar ``epsilon_i`` and ``g_i`` describe a uniform bath.

    Per-spin sequences (length ``N``) make the bath non-uniform; those are
    handled by exact enumeration only, which caps ``N`` at 14.
    """

    epsilon: float
    delta_tunneling: float
    N: int
    epsilon_i: Couplings
    g_i: Couplings
    beta: float

    model_id = "spin_bath"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"spin_bath.N must be an integer >= 1, got {self.N!r}")
        for name in ("epsilon", "delta_tunneling"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"spin_bath.{name} must be finite")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValidationError(f"spin_bath.beta must be finite and > 0, got {self.beta!r}")
        for name in ("epsilon_i", "g_i"):
            v = getattr(self, name)
            if isinstance(v, (list, tuple, np.ndarray)):
                v = tuple(float(x) for x in v)
                if len(v) != self.N:
                    raise ValidationError(
                        f"spin_bath.{name} has {len(v)} entries but N = {self.N}"
                    )
                object.__setattr__(self, name, v)
            if not all(math.isfinite(x) for x in np.atleast_1d(v)):
                raise ValidationError(f"spin_bath.{name} must be finite")
        if not self.uniform and self.N > MAX_ENUMERATION_N:
            raise CapacityError(
                f"non-uniform spin bath needs exact enumeration, limited to "
                f"N <= {MAX_ENUMERATION_N}; got N = {self.N}"
            )

    @property
    def uniform(self) -> bool:
        return not isinstance(self.epsilon_i, tuple) and not isinstance(self.g_i, tuple)

    def transition_kernel(self, tau, bath=None):
        s = spin_bath_transition(self, tau)
        return TransitionKernel.two_level(s, s)


@dataclass(frozen=True)
class SpinBathTerm:
    G_n: float
    eta_n: float
    zeta_n: float
    Omega_n: float
    log_c_n: float
    multiplicity: int = 1
    log_multiplicity: float = 0.0

    @property
    def log_weight(self) -> float:
        return self.log_c_n + self.log_multiplicity


def _make_terms(params, G, eta, mult, log_mult):
    zeta = params.epsilon + G
    omega = 0.5 * np.hypot(zeta, params.delta_tunneling)
    log_c = -0.5 * params.beta * eta
    return [
        SpinBathTerm(float(g), float(e), float(z), float(o), float(lc), int(m), float(lm))
        for g, e, z, o, lc, m, lm in zip(G, eta, zeta, omega, log_c, mult, log_mult)
    ]


def collapse_uniform_bath(params: SpinBathParams) -> list[SpinBathTerm]:
    """Group the ``2^N`` configurations of a uniform bath by the number of down spins.

    Term ``k`` has ``G = g (N - 2k)``, ``eta = epsilon_i (N - 2k)`` and
    multiplicity ``C(N, k)``.
    """
    if not params.uniform:
        raise ValidationError("degeneracy collapse needs scalar epsilon_i and g_i")
    N = params.N
    k = np.arange(N + 1)
    balance = (N - 2 * k).astype(float)
    log_mult = gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
    mult = [math.comb(N, int(j)) for j in k]
    return _make_terms(params, params.g_i * balance, params.epsilon_i * balance, mult, log_mult)


def enumerate_bath_exact(params: SpinBathParams) -> list[SpinBathTerm]:
    """Every bath configuration ``n = (n_1 .. n_N)`` as its own term (``N <= 14``)."""
    N = params.N
    if N > MAX_ENUMERATION_N:
        raise CapacityError(
            f"exact enumeration is limited to N <= {MAX_ENUMERATION_N}; got N = {N}"
        )
    n = np.arange(2**N)
    bits = (n[:, None] >> np.arange(N)[None, :]) & 1
    signs = 1.0 - 2.0 * bits
    g = np.broadcast_to(np.asarray(params.g_i, dtype=float), (N,))
    e = np.broadcast_to(np.asarray(params.epsilon_i, dtype=float), (N,))
    ones = np.ones(n.size, dtype=int)
    return _make_terms(params, signs @ g, signs @ e, ones, np.zeros(n.size))


@functools.lru_cache(maxsize=64)
def _term_arrays(params: SpinBathParams, exact: bool = False):
    terms = enumerate_bath_exact(params) if (exact or not params.uniform) else collapse_uniform_bath(params)
    zeta = np.array([t.zeta_n for t in terms])
    omega = np.array([t.Omega_n for t in terms])
    log_w = np.array([t.log_weight for t in terms])
    weights = np.exp(log_w - logsumexp(log_w))
    for arr in (zeta, omega, weights):
        arr.setflags(write=False)
    return zeta, omega, weights


def log_partition_function(params: SpinBathParams, exact: bool = False) -> float:
    """``ln Z_B`` with ``Z_B = sum_n c_n``, evaluated in the log domain."""
    terms = enumerate_bath_exact(params) if (exact or not params.uniform) else collapse_uniform_bath(params)
    return float(logsumexp([t.log_weight for t in terms]))


def _sinc(x):
    return np.sinc(x / np.pi)


def bloch_coefficients(params: SpinBathParams, tau: float, *, exact: bool = False):
    """Thermally averaged Bloch vector ``(p_x, p_y, p_z)`` of the central spin at ``tau``.

    The per-configuration factors are rewritten with ``sinc`` so that
    ``Omega_n = 0`` needs no special case:
    ``(zeta^2 cos 2 Omega tau + Delta^2) / (4 Omega^2) = 1 - zeta^2 tau^2 sinc^2(Omega tau) / 2``.
    ``exact=True`` forces full enumeration for uniform baths as well.
    """
    if not tau >= 0:
        raise ValidationError(f"tau must be >= 0, got {tau!r}")
    zeta, omega, w = _term_arrays(params, exact)
    D = params.delta_tunneling
    half_sinc2 = 0.5 * tau * tau * _sinc(omega * tau) ** 2
    p_x = 1.0 - float(np.dot(w, zeta * zeta * half_sinc2))
    p_y = float(np.dot(w, zeta * tau * _sinc(2.0 * omega * tau)))
    p_z = float(np.dot(w, D * zeta * half_sinc2))
    return p_x, p_y, p_z


def free_rotation_coefficients(epsilon: float, delta_tunneling: float, tau: float):
    """Coefficients ``(n_x, n_y, n_z)`` that undo the free central-spin evolution."""
    if not tau >= 0:
        raise ValidationError(f"tau must be >= 0, got {tau!r}")
    omega = 0.5 * math.hypot(epsilon, delta_tunneling)
    if omega == 0.0:
        raise ValidationError("free rotation frequency vanishes (epsilon = Delta = 0)")
    c, s = math.cos(omega * tau), math.sin(omega * tau)
    n_x = c * c + s * s / (4 * omega**2) * (delta_tunneling**2 - epsilon**2)
    n_y = epsilon / omega * s * c
    n_z = 0.5 * epsilon * delta_tunneling * s * s / omega**2
    return n_x, n_y, n_z


def _overlap(params, tau, exact=False):
    p = bloch_coefficients(params, tau, exact=exact)
    n = free_rotation_coefficients(params.epsilon, params.delta_tunneling, tau)
    return p[0] * n[0] + p[1] * n[1] + p[2] * n[2]


def spin_bath_transition(params: SpinBathParams, tau: float, *, exact: bool = False) -> float:
    """``s01 = (1 - p.n) / 2``; equal to ``s10``."""
    s = 0.5 * (1.0 - _overlap(params, tau, exact))
    if s < -RANGE_TOL or s > 1.0 + RANGE_TOL or math.isnan(s):
        raise NumericalError(f"spin-bath transition probability {s!r} outside [0, 1] at tau={tau!r}")
    return min(1.0, max(0.0, s))


def spin_bath_decay_rate(params: SpinBathParams, M: int, tau: float,
                         kind=MeasurementKind.NONSELECTIVE) -> float:
    kind = MeasurementKind(kind)
    if int(M) != M or M < 1 or not tau > 0:
        raise ValidationError(f"need M >= 1 and tau > 0, got M={M!r}, tau={tau!r}")
    pn = min(1.0, max(-1.0, _overlap(params, tau)))
    if kind is MeasurementKind.SELECTIVE:
        M = 1
    # S = 1 - (1 - pn^M) / 2, kept in log1p form for S close to 1
    loss = 0.5 * (1.0 - pn**M)
    if loss >= 1.0:
        raise InfiniteRateError(f"zero survival at tau={tau!r}")
    return -math.log1p(-loss) / (M * tau)
