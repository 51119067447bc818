"""Exception hierarchy shared by every boxlab module."""

from __future__ import annotations


class BoxLabError(Exception):
    """Base class for all domain errors raised by boxlab."""


class DegenerateBox(BoxLabError, ValueError):
    """A box has zero or negative width or height."""


class NonFinite(BoxLabError, ValueError):
    """A coordinate, extent or score is NaN or infinite."""


class InvalidProbability(BoxLabError, ValueError):
    pass


class InvalidLabel(BoxLabError, ValueError):
    pass


class NonDifferentiablePoint(BoxLabError, ValueError):
    """The box pair sits too close to a min/max switch for finite differences."""


class DivergedToNonFinite(BoxLabError, ArithmeticError):
    """Gradient descent produced a NaN/inf parameter.

    ``trace`` holds the steps recorded before the failure.
    """

    def __init__(self, message: str, trace=None, loss_id: str | None = None):
        super().__init__(message)
        self.trace = trace
        self.loss_id = loss_id


class NoGroundTruth(BoxLabError, ValueError):
    pass


class ZeroDuration(BoxLabError, ValueError):
    pass


class AnnotationError(BoxLabError, ValueError):
    """Malformed line in a ground-truth or detection file."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
