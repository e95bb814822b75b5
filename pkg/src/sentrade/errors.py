"""Package exception types."""


class SentradeError(Exception):
    """Base class for all package errors."""


class DataError(SentradeError, ValueError):
    """Input data is malformed or violates a documented invariant."""


class ConfigError(SentradeError, ValueError):
    """A configuration file, parameter, or command line is invalid."""
