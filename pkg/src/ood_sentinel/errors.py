"""Exception hierarchy; each branch maps to one CLI exit code."""


class EngineError(Exception):
    """Base class for all detector-engine failures."""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def add_context(self, prefix: str) -> "EngineError":
        self.message = f"{prefix}: {self.message}"
        self.args = (self.message,)
        return self


class UsageError(EngineError):
    """Bad invocation: invalid flag values, missing required inputs."""

    exit_code = 2


class ConfigError(UsageError):
    """A recipe references an input that was not supplied."""


class RecipeParseError(UsageError):
    """Recipe text rejected by the grammar; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(message)
        self.position = position


class FormatError(EngineError):
    """Malformed file: bad magic, truncated payload, broken JSON."""

    exit_code = 3


class DataError(EngineError):
    """Well-formed but invalid data: NaN entries, bad manifest fields."""

    exit_code = 4


class DimensionError(DataError):
    """Vector or matrix dimensions do not agree."""


class AlignmentError(DataError):
    """Row counts of positionally aligned inputs do not agree."""


class InsufficientDataError(DataError):
    """Too few samples for the requested operation."""


class UndefinedMetricError(DataError):
    """Metric denominator is zero; cell is reported as not-a-value."""


class NumericError(EngineError):
    """Numeric degeneracy: zero norms, zero variance, non-convergence."""

    exit_code = 5


class DegenerateVectorError(NumericError):
    """A vector with zero norm where a direction is required."""


class DegenerateSamplesError(NumericError):
    """Samples carry no variance; no distribution can be fitted."""
