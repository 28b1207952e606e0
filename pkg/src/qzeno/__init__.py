"""Zeno and anti-Zeno effects under repeated non-selective measurements."""
from .analysis import DecayCurve, GridSpec, Regime, RegimeSegmentation, classify_regimes, find_peaks, sweep
from .bath import OhmicBath, delta, gamma, gamma_zero_temperature
from .chain import (
    MeasurementKind,
    Protocol,
    TransitionKernel,
    effective_decay_rate,
    selective_decay_rate,
    survival,
    survival_matrix_power,
    survival_three_level_symmetric,
    survival_two_level_closed,
    survival_two_level_series,
)
from .errors import CapacityError, InfiniteRateError, NumericalError, QZenoError, ValidationError

__version__ = "0.1.0"
