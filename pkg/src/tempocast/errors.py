"""Exception hierarchy shared by every tempocast module."""


class TempocastError(Exception):
    """Base class for all errors raised by tempocast."""


class DimensionError(TempocastError, ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(TempocastError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ConfigError(TempocastError, ValueError):
    """A configuration value is out of its admissible range."""


class LoadError(TempocastError, ValueError):
    """The input CSV could not be parsed into a valid daily series."""


class ScaleError(TempocastError, ValueError):
    """Min-max scaling is undefined for the given data."""


class MetricError(TempocastError, ValueError):
    """A forecast metric is undefined for the given data."""


class TrainingError(TempocastError, RuntimeError):
    """Training diverged or could not proceed."""
