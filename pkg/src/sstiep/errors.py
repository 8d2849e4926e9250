"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SstiepError(Exception):
    """Base class for errors raised by this package."""


class ShapeMismatch(SstiepError, ValueError):
    pass


class SingularMatrix(SstiepError, ArithmeticError):
    pass


class InvalidData(SstiepError, ValueError):
    """Spectrum/weight data violating the admissibility conditions."""


class InvalidBeta(InvalidData):
    pass


class InfeasibleInput(SstiepError, ValueError):
    pass


class InfeasiblePoint(SstiepError, ValueError):
    pass


class UnsupportedDimension(SstiepError, ValueError):
    pass


class NonnegativityViolated(SstiepError, ValueError):
    pass


class NotNormalized(SstiepError, ValueError):
    pass


class SubproblemFailure(SstiepError, RuntimeError):
    pass


class FormatError(SstiepError, ValueError):
    """Malformed problem/result file; ``where`` names the field or line."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
