from __future__ import annotations


class PECodeError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    exit_code = 1
    category = "error"


class InvalidParameterError(PECodeError, ValueError):
    exit_code = 2
    category = "invalid-parameter"


class ConfigError(PECodeError):
    exit_code = 2
    category = "config"


class CapacityError(PECodeError):
    """Raised when an exponential-cost routine is asked for a size it refuses."""

    exit_code = 3
    category = "capacity"


class ParseError(PECodeError):
    exit_code = 4
    category = "parse"


class MissingArtifactError(PECodeError):
    exit_code = 5
    category = "missing-artifact"
