"""Exception hierarchy shared across the rig."""

from __future__ import annotations


class RigError(Exception):
    """Base class for every error raised by the rig."""


class ConfigurationError(RigError):
    """Raised when configuration is missing, malformed or inconsistent."""


class InputValidationError(RigError, ValueError):
    """Raised when caller-supplied data violates an operation's precondition."""


class FormatVersionError(RigError):
    """Raised when a persisted document has an unknown format or version."""

    def __init__(self, message: str, *, found: object = None) -> None:
        super().__init__(message)
        self.found = found


__all__ = [
    "ConfigurationError",
    "FormatVersionError",
    "InputValidationError",
    "RigError",
]
