"""Exception hierarchy.

Every error raised by the library derives from :class:`MarswarmError`. The
two main branches map onto the command-line exit codes: configuration
problems (exit 2) and data problems (exit 3).
"""


class MarswarmError(Exception):
    """Base class for all library errors."""


class ConfigError(MarswarmError, ValueError):
    """Invalid user configuration (exit code 2)."""


class DataError(MarswarmError, ValueError):
    """Invalid or inconsistent input data (exit code 3)."""


class OptimizationError(MarswarmError, RuntimeError):
    """The optimizer produced no usable solution (exit code 4)."""


# market data
class MissingColumn(DataError):
    pass


class UnparsableDate(DataError):
    pass


class UnparsableValue(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class DuplicateTicker(DataError):
    pass


class DuplicateRow(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptyWindow(DataError):
    pass


# metrics / backtest
class TooFewPoints(DataError):
    pass


class TickerMismatch(DataError):
    pass


class UnknownTicker(DataError):
    pass


# universe / pso / margin
class InfeasibleRule(ConfigError):
    pass


class InfeasibleBounds(ConfigError):
    pass


class InvalidConfig(ConfigError):
    pass
