"""Exception hierarchy.

Every error carries the CLI exit code of its family: 2 for input parsing,
3 for configuration, 4 for numerical failures.
"""

from __future__ import annotations


class MbpmError(Exception):
    exit_code = 1


class ParseError(MbpmError, ValueError):
    exit_code = 2

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConfigError(MbpmError, ValueError):
    exit_code = 3


class NumericError(MbpmError, ArithmeticError):
    exit_code = 4


# -- tick parsing -----------------------------------------------------------

class MalformedRow(ParseError):
    pass


class NonPositiveField(ParseError):
    pass


class ValueMismatch(ParseError):
    pass


class NonMonotoneTime(ParseError):
    pass


# -- configuration / caller errors ------------------------------------------

class InvalidConfig(ConfigError):
    pass


class OrderOutOfRange(ConfigError):
    pass


class InsufficientMoments(ConfigError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


class BadDistribution(ConfigError):
    pass


class GridTooCoarse(ConfigError):
    pass


# -- numerical ----------------------------------------------------------------

class EmptyWindow(NumericError):
    pass


class NonPositiveVariance(NumericError):
    def __init__(self, message: str, variance: float | None = None):
        self.variance = variance
        super().__init__(message)


class NonPositiveConsumption(NumericError):
    pass


class InfeasibleConsumption(NumericError):
    pass


class DegenerateDenominator(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class NegativePrice(NumericError):
    pass


class ZeroVariance(NumericError):
    pass


class SkewnessBelowBound(NumericError):
    pass


class RiskFreeInconsistent(NumericError):
    pass
