"""Decay-rate sweeps over the measurement interval and Zeno / anti-Zeno labelling.

A curve is in the Zeno regime where the effective decay rate grows with the
measurement interval (measuring more often protects the state) and in the
anti-Zeno regime where it falls.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import chain
from .chain import MeasurementKind
from .errors import QZenoError, ValidationError

PLATEAU_TOL = 1e-12


class Regime(str, enum.Enum):
    ZENO = "zeno"
    ANTI_ZENO = "anti_zeno"


@dataclass(frozen=True)
class GridSpec:
    tau_min: float
    tau_max: float
    count: int
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise ValidationError(f"grid.spacing must be 'log' or 'linear', got {self.spacing!r}")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError(f"grid.count must be an integer >= 2, got {self.count!r}")
        if not (0 < self.tau_min < self.tau_max < math.inf):
            raise ValidationError(
                f"grid needs 0 < tau_min < tau_max, got {self.tau_min!r}, {self.tau_max!r}"
            )

    def taus(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.tau_min, self.tau_max, int(self.count))
        return np.linspace(self.tau_min, self.tau_max, int(self.count))


@dataclass(frozen=True)
class DecayCurve:
    model_id: str
    M: int
    kind: MeasurementKind
    samples: tuple  # ((tau, survival, rate), ...)
    grid: GridSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasurementKind(self.kind))
        taus = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValidationError("curve samples must be strictly increasing in tau")
        for tau, surv, rate in self.samples:
            if not (0.0 < surv <= 1.0) or not (rate >= 0.0 and math.isfinite(rate)):
                raise ValidationError(
                    f"invalid sample at tau={tau!r}: survival={surv!r}, rate={rate!r}"
                )

    @classmethod
    def from_rates(cls, taus, rates, *, model_id="synthetic", M=1,
                   kind=MeasurementKind.SELECTIVE) -> "DecayCurve":
        """Build a curve from bare (tau, rate) data; survival is implied by the rate."""
        samples = tuple(
            (float(t), math.exp(-float(r) * M * float(t)), float(r)) for t, r in zip(taus, rates)
        )
        return cls(model_id, M, kind, samples)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def survival(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def rates(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])

    @property
    def label(self) -> str:
        return f"{self.kind.value}/M={self.M}"


@dataclass(frozen=True)
class RegimeSegmentation:
    segments: tuple = ()  # ((tau_start, tau_end, Regime), ...)
    crossovers: tuple = ()
    peaks: tuple = ()  # ((tau, rate), ...)

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"tau_start": a, "tau_end": b, "label": lab.value} for a, b, lab in self.segments
            ],
            "crossovers": list(self.crossovers),
            "peaks": [{"tau": t, "rate": r} for t, r in self.peaks],
        }


def _normalise_protocols(protocols):
    out = []
    for p in protocols:
        if isinstance(p, chain.Protocol):
            M, kind = p.M, p.kind
        else:
            M, kind = p
        if int(M) != M or M < 1:
            raise ValidationError(f"protocol M must be an integer >= 1, got {M!r}")
        out.append((int(M), MeasurementKind(kind)))
    if not out:
        raise ValidationError("at least one protocol is required")
    return out


def _evaluate(model, bath, protocols, tau):
    try:
        kernel = model.transition_kernel(tau, bath)
        row = []
        for M, kind in protocols:
            if kind is MeasurementKind.SELECTIVE:
                leave = math.fsum(kernel.offdiag[0])
                S = chain.selective_survival(kernel, M)
                rate = chain.selective_decay_rate(min(1.0, leave), tau)
            else:
                S = chain.survival(kernel, M)
                rate = chain.effective_decay_rate(S, M, tau)
            row.append((min(1.0, S), rate))
        return row
    except QZenoError as exc:
        exc.tau = tau
        raise


def sweep(model, bath, protocols, grid: GridSpec, threads: int = 1) -> list[DecayCurve]:
    """Evaluate one decay curve per ``(M, kind)`` protocol over the grid.

    The transition kernel, and with it every bath integral, is computed once
    per tau and shared by all protocols. Work is split by tau and written into
    pre-indexed slots, so the result does not depend on ``threads``.
    Errors carry the offending tau in ``exc.tau``.
    """
    protocols = _normalise_protocols(protocols)
    taus = [float(t) for t in grid.taus()]
    if threads is None or threads <= 1:
        rows = [_evaluate(model, bath, protocols, t) for t in taus]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            rows = list(pool.map(lambda t: _evaluate(model, bath, protocols, t), taus))
    curves = []
    for j, (M, kind) in enumerate(protocols):
        samples = tuple((t, rows[i][j][0], rows[i][j][1]) for i, t in enumerate(taus))
        curves.append(DecayCurve(model.model_id, M, kind, samples, grid))
    return curves


def _slope_signs(t, r):
    d = np.diff(r)
    signs = np.where(np.abs(d) < PLATEAU_TOL, 0, np.sign(d)).astype(int)
    nonzero = signs[signs != 0]
    if nonzero.size == 0:
        # a flat curve counts as one Zeno segment
        return np.ones_like(signs), d / np.diff(t)
    # plateaus join the preceding segment; leading plateaus the first one
    fill = nonzero[0]
    for i, s in enumerate(signs):
        if s == 0:
            signs[i] = fill
        else:
            fill = s
    return signs, d / np.diff(t)


def _check_curve(curve):
    if len(curve.samples) < 3:
        raise ValidationError("regime analysis needs at least 3 samples")
    return curve.taus, curve.rates


def find_peaks(curve: DecayCurve) -> list[tuple[float, float]]:
    """Local maxima of the rate, refined by a parabola through the neighbours."""
    t, r = _check_curve(curve)
    signs, _ = _slope_signs(t, r)
    peaks = []
    for i in range(len(signs) - 1):
        # plateaus are merged forward, so sample i+1 is the top of a rise
        if signs[i] > 0 and signs[i + 1] < 0:
            k = i + 1
            peaks.append(_parabola_vertex(t[k - 1: k + 2], r[k - 1: k + 2]))
    return peaks


def _parabola_vertex(x, y):
    (x0, x1, x2), (y0, y1, y2) = x, y
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if den == 0.0:
        return float(x1), float(y1)
    xv = x1 - 0.5 * num / den
    xv = min(max(xv, x0), x2)
    # Lagrange form evaluated at the vertex
    yv = (y0 * (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2))
          + y1 * (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2))
          + y2 * (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1)))
    return float(xv), float(max(yv, y1))


def classify_regimes(curve: DecayCurve) -> RegimeSegmentation:
    """Split the grid into maximal Zeno / anti-Zeno stretches.

    Labels follow the sign of the forward difference of the rate. A crossover
    sits where the linearly interpolated slope between the midpoints of the
    last interval of one sign and the first of the other passes through zero.
    """
    t, r = _check_curve(curve)
    signs, slopes = _slope_signs(t, r)
    raw = np.diff(r)
    mids = 0.5 * (t[:-1] + t[1:])
    segments = []
    crossovers = []
    start = float(t[0])
    last_strict = 0 if abs(raw[0]) >= PLATEAU_TOL else None
    for i in range(1, len(signs)):
        if signs[i] != signs[i - 1]:
            a = last_strict if last_strict is not None else i - 1
            sa, sb = slopes[a], slopes[i]
            x = mids[a] + (mids[i] - mids[a]) * sa / (sa - sb) if sa != sb else mids[i]
            x = float(x)
            segments.append((start, x, _regime(signs[i - 1])))
            crossovers.append(x)
            start = x
        if abs(raw[i]) >= PLATEAU_TOL:
            last_strict = i
    segments.append((start, float(t[-1]), _regime(signs[-1])))
    return RegimeSegmentation(tuple(segments), tuple(crossovers), tuple(find_peaks(curve)))


def _regime(sign):
    return Regime.ZENO if sign > 0 else Regime.ANTI_ZENO
