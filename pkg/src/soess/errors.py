"""Shared exception types."""


class SoessError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SoessError):
    """A data or config file is missing, empty, or malformed."""
