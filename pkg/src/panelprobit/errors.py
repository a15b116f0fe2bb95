"""Exception hierarchy.

Errors split into two families so the command line can map them to exit
codes: :class:`UserInputError` (bad files, flags, configs) and
:class:`NumericalError` (the data or model leaves an estimator undefined).
"""

from __future__ import annotations


class PanelProbitError(Exception):
    """Base class for every error raised by this package."""

    def to_dict(self) -> dict:
        payload = {"error": type(self).__name__, "message": str(self)}
        payload.update(getattr(self, "details", {}))
        return payload


class UserInputError(PanelProbitError):
    pass


class NumericalError(PanelProbitError):
    pass


# -- input / schema -------------------------------------------------------

class SchemaError(UserInputError):
    pass


class NonBinaryOutcome(UserInputError):
    pass


class RaggedPanel(UserInputError):
    pass


class DuplicateRow(UserInputError):
    pass


class WrongHorizon(UserInputError):
    pass


class ConfigError(UserInputError):
    pass


class UnsupportedPrior(UserInputError):
    pass


class DivergentIntegrand(UserInputError):
    pass


# -- numerical ------------------------------------------------------------

class NonPositiveRatio(NumericalError):
    pass


class DegenerateCounts(NumericalError):
    def __init__(self, message: str, **counts: int):
        super().__init__(message)
        self.details = {"counts": counts}


class NoSwitchers(NumericalError):
    pass


class Diverged(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NonFiniteLikelihood(NumericalError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.details = {"individual": index}


class NotConverged(NumericalError):
    pass


class BoundarySigma(NotConverged):
    pass


class AllReplicationsFailed(NumericalError):
    pass


class NonConcaveWarning(RuntimeWarning):
    """Numerical second derivative at a reported maximum is not negative."""
