"""Exception hierarchy shared by all pipeline stages."""


class SolarHarvestError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SolarHarvestError, ValueError):
    """Invalid or inconsistent run configuration."""


class DataError(SolarHarvestError, ValueError):
    """Input data that cannot be parsed or violates an invariant.

    ``line`` carries the 1-based line number of the offending row when the
    error comes from a file.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelError(SolarHarvestError, ValueError):
    """A model cannot be built, loaded, or validated."""


class DegenerateMonthError(ModelError):
    """A month's harvested series carries no energy to cluster."""


class DegenerateDataError(ModelError):
    """Too few (or identical) observations to fit a smoothed density."""


class ModelFileError(ModelError):
    """A serialized model is corrupted, of the wrong version, or invalid."""
