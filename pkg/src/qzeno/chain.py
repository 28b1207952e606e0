"""Survival probabilities under repeated measurements.

Each measurement interval maps the system between measurement-basis states
with the probabilities held in a row-stochastic :class:`TransitionKernel`.
The probability of finding the initial state after ``M`` intervals, with the
intermediate outcomes either unread or unrestricted, is the top-left element
of the ``M``-th kernel power. The composition assumes no system-environment
correlations survive a measurement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapacityError, InfiniteRateError, NumericalError, ValidationError

ROW_SUM_TOL = 1e-12
DRIFT_TOL = 1e-9
SERIES_MAX_M = 64
# survival values this far above 1 are rounding noise, not a contract violation
SURVIVAL_SLACK = 1e-12


class MeasurementKind(str, enum.Enum):
    SELECTIVE = "selective"
    NONSELECTIVE = "nonselective"


@dataclass(frozen=True)
class Protocol:
    M: int
    tau: float
    kind: MeasurementKind = MeasurementKind.NONSELECTIVE

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError(f"M must be an integer >= 1, got {self.M!r}")
        if not self.tau > 0:
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")
        object.__setattr__(self, "kind", MeasurementKind(self.kind))


@dataclass(frozen=True)
class TransitionKernel:
    """Per-interval transition probabilities between measurement-basis states.

    Only the off-diagonal probabilities are stored; ``offdiag[i][i]`` is
    ignored and the diagonal is always derived as one minus the row sum, so a
    kernel can never carry an inconsistent row.
    """

    offdiag: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.offdiag)
        dim = len(rows)
        if dim < 2 or any(len(r) != dim for r in rows):
            raise ValidationError("kernel must be a square matrix of dimension >= 2")
        cleaned = []
        for i, row in enumerate(rows):
            row = tuple(0.0 if j == i else v for j, v in enumerate(row))
            for j, v in enumerate(row):
                if not (0.0 <= v <= 1.0):
                    raise ValidationError(f"s[{i}][{j}] = {v!r} is not a probability")
            if math.fsum(row) > 1.0 + ROW_SUM_TOL:
                raise ValidationError(
                    f"off-diagonal sum of row {i} is {math.fsum(row)!r} > 1"
                )
            cleaned.append(row)
        object.__setattr__(self, "offdiag", tuple(cleaned))

    @classmethod
    def two_level(cls, s01: float, s10: float) -> "TransitionKernel":
        return cls(((0.0, s01), (s10, 0.0)))

    @classmethod
    def symmetric_three_level(cls, s01: float, s02: float) -> "TransitionKernel":
        """Kernel with s01 = s10 = s12 = s21 and s02 = s20."""
        return cls(((0.0, s01, s02), (s01, 0.0, s01), (s02, s01, 0.0)))

    @property
    def dim(self) -> int:
        return len(self.offdiag)

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            return max(0.0, 1.0 - math.fsum(self.offdiag[i]))
        return self.offdiag[i][j]

    @property
    def matrix(self) -> np.ndarray:
        m = np.array(self.offdiag, dtype=float)
        np.fill_diagonal(m, 0.0)
        np.fill_diagonal(m, 1.0 - m.sum(axis=1))
        return m

    def is_symmetric_three_level(self) -> bool:
        if self.dim != 3:
            return False
        s = self.offdiag
        return s[0][1] == s[1][0] == s[1][2] == s[2][1] and s[0][2] == s[2][0]


def _check_stochastic(m: np.ndarray, stage: str) -> None:
    drift = np.max(np.abs(m.sum(axis=1) - 1.0))
    if drift > DRIFT_TOL or np.min(m) < -DRIFT_TOL:
        raise NumericalError(
            f"matrix power lost row-stochasticity after {stage} (row-sum drift {drift:.3e})"
        )


def survival_matrix_power(kernel: TransitionKernel, M: int) -> float:
    """Return ``[kernel**M][0, 0]`` by binary exponentiation.

    ``M = 0`` returns 1 (no interval has elapsed). Every intermediate product
    is checked to still be row-stochastic within 1e-9.
    """
    if int(M) != M or M < 0:
        raise ValidationError(f"M must be a non-negative integer, got {M!r}")
    M = int(M)
    if M == 0:
        return 1.0
    base = kernel.matrix
    result = None
    step = 0
    while M:
        if M & 1:
            result = base if result is None else result @ base
            _check_stochastic(result, f"multiply {step}")
        M >>= 1
        if M:
            base = base @ base
            step += 1
            _check_stochastic(base, f"squaring {step}")
    return float(min(1.0, max(0.0, result[0, 0])))


def _check_pair(s01, s10):
    for name, v in (("s01", s01), ("s10", s10)):
        if not (0.0 <= v <= 1.0):
            raise ValidationError(f"{name} = {v!r} is not a probability")


def _check_M(M):
    if int(M) != M or M < 1:
        raise ValidationError(f"M must be an integer >= 1, got {M!r}")
    return int(M)


def survival_two_level_closed(s01: float, s10: float, M: int) -> float:
    """Closed-form two-level survival ``(s01 (1-s01-s10)^M + s10) / (s01+s10)``.

    With no transitions at all (``s01 = s10 = 0``) the state survives with
    certainty.
    """
    _check_pair(s01, s10)
    M = _check_M(M)
    total = s01 + s10
    if total == 0.0:
        return 1.0
    if s10 == 0.0 or M == 1:
        # absorbing excited state, or a single interval; skip the s01/s01 round trip
        return (1.0 - s01) ** M
    return (s01 * (1.0 - total) ** M + s10) / total


def survival_two_level_series(s01: float, s10: float, M: int) -> float:
    """Binomial-series form of the two-level survival probability.

    ``1 - M s01 + s01 * sum_{k=1}^{M-1} (-1)^{k+1} C(M, k+1) (s01+s10)^k``

    The alternating sum cancels catastrophically in floating point for large
    ``M``, so it is evaluated in exact rational arithmetic on the binary values
    of the inputs and rounded once at the end. Limited to ``M <= 64``; the
    closed form serves larger ``M``.
    """
    _check_pair(s01, s10)
    M = _check_M(M)
    if M > SERIES_MAX_M:
        raise CapacityError(f"series form supports M <= {SERIES_MAX_M}, got {M}")
    a = Fraction(s01)
    x = a + Fraction(s10)
    # x = X / D with D a power of two; Horner over k = M-1 .. 1 in integers,
    # h accumulating sum_k c_k X^(k-1) D^(M-1-k)
    X, D = x.numerator, x.denominator
    h = 0
    scale = 1
    for k in range(M - 1, 0, -1):
        h = h * X + (-1) ** (k + 1) * math.comb(M, k + 1) * scale
        scale *= D
    acc = Fraction(h * X, scale) if M > 1 else Fraction(0)
    return float(1 - M * a + a * acc)


def survival_three_level_symmetric(s01: float, s02: float, M: int) -> float:
    """Survival for the symmetric three-level kernel.

    Valid for s01 = s10 = s12 = s21 and s02 = s20:
    ``(2 + (1 - 3 s01)^M + 3 (1 - s01 - 2 s02)^M) / 6``.
    """
    M = _check_M(M)
    # construction validates the row sums
    TransitionKernel.symmetric_three_level(s01, s02)
    return (2.0 + (1.0 - 3.0 * s01) ** M + 3.0 * (1.0 - s01 - 2.0 * s02) ** M) / 6.0


def survival(kernel: TransitionKernel, M: int) -> float:
    """Non-selective survival, using a closed form whenever one applies."""
    if kernel.dim == 2:
        return survival_two_level_closed(kernel[0, 1], kernel[1, 0], M)
    if kernel.is_symmetric_three_level():
        return survival_three_level_symmetric(kernel[0, 1], kernel[0, 2], M)
    return survival_matrix_power(kernel, M)


def selective_survival(kernel: TransitionKernel, M: int) -> float:
    """Probability that all ``M`` readouts return the initial state: ``s00**M``."""
    M = _check_M(M)
    return kernel[0, 0] ** M


def effective_decay_rate(S: float, M: int, tau: float) -> float:
    """Invert ``S = exp(-Gamma M tau)`` for Gamma."""
    M = _check_M(M)
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau!r}")
    if not (0.0 <= S <= 1.0 + SURVIVAL_SLACK):
        raise ValidationError(f"survival probability {S!r} outside (0, 1]")
    if S == 0.0:
        raise InfiniteRateError(f"zero survival at M={M}, tau={tau!r}: rate diverges")
    if S >= 1.0:
        return 0.0
    return -math.log(S) / (M * tau)


def selective_decay_rate(s01: float, tau: float) -> float:
    """Rate ``-ln(1 - s01) / tau`` for repeated selective measurements."""
    if not (0.0 <= s01 <= 1.0):
        raise ValidationError(f"s01 = {s01!r} is not a probability")
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau!r}")
    if s01 == 1.0:
        raise InfiniteRateError(f"s01 = 1 at tau={tau!r}: rate diverges")
    return -math.log1p(-s01) / tau
