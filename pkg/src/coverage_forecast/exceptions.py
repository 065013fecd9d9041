class CoverageForecastError(Exception):
    """Base class for errors raised by coverage_forecast."""


class UnknownProcedureError(CoverageForecastError, KeyError):
    """A procedure-id or outcome id is not present in the records."""


class UnknownStatisticError(CoverageForecastError, KeyError):
    """A statistic-id is not present in the records."""


class MisconfiguredExperimentError(CoverageForecastError, ValueError):
    """An experiment produced nothing to summarise (no records, no scores, empty bins)."""


class StatisticOutOfRangeError(CoverageForecastError, ValueError):
    """A statistic value falls outside a table's binning."""


class UnboundedIntervalError(CoverageForecastError, ValueError):
    """A finite-width quantity was requested for an interval with an infinite endpoint."""


class ProcedureError(CoverageForecastError, AssertionError):
    """A confidence procedure broke one of its own geometric guarantees."""


class BinningMismatchError(CoverageForecastError, ValueError):
    """Tables that should share a binning do not."""


class InvalidConfigurationError(CoverageForecastError, ValueError):
    """Run settings, tolerances or game stakes given on the command line or in a config file are invalid."""
