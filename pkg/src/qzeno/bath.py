"""Harmonic-oscillator environment: dephasing factor and bath-mediated phase.

The mode sums are replaced by frequency integrals weighted by the spectral
density, ``sum_k |g_k|^2 f(w_k) -> int_0^inf J(w) f(w) dw``; ``J`` carries the
density of squared couplings.

``gamma(tau) = int J(w)/w^2 (1 - cos w tau) coth(beta w / 2) dw``
``delta(tau) = int J(w)/w^2 (sin w tau - w tau) dw``

Any object with ``spectral_density(w)``, ``omega_c`` and ``beta`` can stand
in for :class:`OhmicBath` in :func:`gamma` and :func:`delta_quadrature`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .quadrature import integrate_panels

SMALL_OMEGA = 1e-6  # in units of omega_c; below this the integrand is replaced by its limit
TRUNCATION = 40.0  # upper limit in units of omega_c; the tail is below exp(-40) relative
MAX_PANELS = 200_000  # initial panels; long intervals need one per half period


@dataclass(frozen=True)
class OhmicBath:
    """``J(w) = G w exp(-w / omega_c)`` at inverse temperature ``beta``.

    ``beta = math.inf`` selects the zero-temperature limit where
    ``coth(beta w / 2) = 1``.
    """

    G: float
    omega_c: float
    beta: float

    def __post_init__(self):
        for name in ("G", "omega_c", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0) or math.isnan(v):
                raise ValidationError(f"bath.{name} must be > 0, got {v!r}")
        if math.isinf(self.G) or math.isinf(self.omega_c):
            raise ValidationError("bath.G and bath.omega_c must be finite")

    def spectral_density(self, omega):
        return self.G * omega * np.exp(-omega / self.omega_c)

    def delta_closed_form(self, tau: float) -> float:
        x = self.omega_c * tau
        if x < 1e-2:
            # arctan(x) - x without cancellation
            x2 = x * x
            s = -x2 * x * (1 / 3 - x2 * (1 / 5 - x2 * (1 / 7 - x2 * (1 / 9 - x2 / 11))))
            return self.G * s
        return self.G * (math.atan(x) - x)


@dataclass(frozen=True)
class DephasingFactors:
    tau: float
    gamma: float
    delta: float


def _check_tau(tau):
    if not (tau >= 0) or math.isinf(tau):
        raise ValidationError(f"tau must be finite and >= 0, got {tau!r}")
    return float(tau)


def _panels(bath, tau):
    wc = bath.omega_c
    w_max = wc * TRUNCATION
    width = min(math.pi / tau, wc)
    n = max(1, math.ceil(w_max / width))
    if n > MAX_PANELS:
        raise NumericalError(
            f"tau={tau!r} needs {n} quadrature panels (limit {MAX_PANELS}); omega_c * tau is too large"
        )
    return np.linspace(0.0, w_max, n + 1)


def gamma(bath, tau: float, *, upper_scale: float = 1.0) -> float:
    """Dephasing factor ``gamma(tau)`` by adaptive panel quadrature.

    ``upper_scale`` stretches the truncation point; it exists for checking
    that the truncated tail is negligible.
    """
    tau = _check_tau(tau)
    if tau == 0.0:
        return 0.0
    beta = bath.beta
    cold = math.isinf(beta)
    w_small = SMALL_OMEGA * bath.omega_c

    def integrand(w):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            core = bath.spectral_density(w) * 2.0 * np.sin(0.5 * w * tau) ** 2 / (w * w)
            if not cold:
                core = core / np.tanh(0.5 * beta * w)
            # second-order expansion of the coth and (1 - cos) factors around w = 0
            wt2 = (w * tau) ** 2
            if cold:
                limit = bath.spectral_density(w) * tau * tau / 2.0 * (1.0 - wt2 / 12.0)
            else:
                limit = bath.spectral_density(w) / w * tau * tau / beta \
                    * (1.0 - wt2 / 12.0 + (beta * w) ** 2 / 12.0)
        return np.where(w < w_small, limit, core)

    edges = _panels(bath, tau)
    if upper_scale != 1.0:
        edges = np.linspace(0.0, edges[-1] * upper_scale, round((edges.size - 1) * upper_scale) + 1)
    return integrate_panels(integrand, edges)


def gamma_zero_temperature(bath: OhmicBath, tau: float) -> float:
    """Analytic zero-temperature Ohmic dephasing ``(G/2) ln(1 + (omega_c tau)^2)``."""
    tau = _check_tau(tau)
    return 0.5 * bath.G * math.log1p((bath.omega_c * tau) ** 2)


def delta_quadrature(bath, tau: float) -> float:
    """Bath-mediated phase ``delta(tau)`` by quadrature (any spectral density)."""
    tau = _check_tau(tau)
    if tau == 0.0:
        return 0.0

    def integrand(w):
        x = w * tau
        x2 = x * x
        # sin(x) - x through the x^17 term; switching at 0.5 keeps the seam below rounding
        series = -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (
            1.0 - x2 / 110.0 * (1.0 - x2 / 156.0 * (1.0 - x2 / 210.0 * (1.0 - x2 / 272.0)))))))
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = np.where(x < 0.5, series, np.sin(x) - x)
            return bath.spectral_density(w) * diff / (w * w)

    return integrate_panels(integrand, _panels(bath, tau))


def delta(bath, tau: float) -> float:
    """Bath-mediated phase ``delta(tau)``; analytic where the bath provides it."""
    tau = _check_tau(tau)
    if tau == 0.0:
        return 0.0
    closed = getattr(bath, "delta_closed_form", None)
    if closed is not None:
        return closed(tau)
    return delta_quadrature(bath, tau)


def dephasing_factors(bath, tau: float) -> DephasingFactors:
    return DephasingFactors(tau=float(tau), gamma=gamma(bath, tau), delta=delta(bath, tau))
