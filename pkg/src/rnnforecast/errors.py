"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems with 3 and numeric failures with 4.
"""


class RnnForecastError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class ConfigError(RnnForecastError, ValueError):
    """Invalid configuration or violated precondition."""

    exit_code = 2


class ShapeError(ConfigError):
    """Array shapes do not agree."""


class DataError(RnnForecastError, ValueError):
    """Input data could not be read or is unusable."""

    exit_code = 3


class DegenerateSeriesError(DataError):
    """Series is constant, so min-max normalization is undefined."""


class NumericError(RnnForecastError, ArithmeticError):
    """A computation produced NaN or infinity."""

    exit_code = 4
