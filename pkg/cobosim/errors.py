"""Exception types raised by cobosim."""

from typing import Optional


class CoboError(Exception):
    """Base class for all cobosim errors."""


class UsageError(CoboError, ValueError):
    """Invalid call: mismatched dimensions, empty inputs, non-finite values."""


class ConfigError(CoboError, ValueError):
    """Invalid or infeasible configuration.

    Attributes:
        key: Dotted path of the offending config key (e.g. ``train.eta``), if known
    """

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class NotApplicableError(CoboError):
    """Measurement requested for a setting where it is undefined."""


class ConstantsUnavailableError(CoboError):
    """Theory constants requested for tasks without closed-form constants."""
