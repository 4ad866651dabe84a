"""Shared exception types."""


class GuardError(RuntimeError):
    """Raised when an operation would exceed a configured resource guard."""


class ConfigError(ValueError):
    """Raised when a run configuration fails validation."""
