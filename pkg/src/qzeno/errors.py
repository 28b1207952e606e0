"""Exception hierarchy shared by every qzeno module."""


class QZenoError(Exception):
    """Base class. ``tau`` is filled in by the sweep engine when known."""

    tau = None


class ValidationError(QZenoError, ValueError):
    """An input violates a documented precondition."""


class CapacityError(ValidationError):
    """A request exceeds a fixed capacity limit (enumeration size, binomial range)."""


class NumericalError(QZenoError, ArithmeticError):
    """A computation produced a value outside its mathematically allowed range."""


class InfiniteRateError(NumericalError):
    """The effective decay rate diverges (zero survival probability)."""
