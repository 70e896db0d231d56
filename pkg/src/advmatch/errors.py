"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: ``UsageError``/``ConfigError`` -> 2,
``CapacityError`` -> 3.
"""


class AdvMatchError(Exception):
    """Base class for all package errors."""


class UsageError(AdvMatchError, ValueError):
    """Caller violated a documented precondition (shapes, ranges, ...)."""


class ConfigError(UsageError):
    """A configuration value failed validation; ``key`` names the offender."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class CapacityError(AdvMatchError):
    """A computation would exceed a configured resource guard."""


class DetectionError(AdvMatchError):
    """Two columns of the unlabeled database share a histogram.

    ``pair`` holds the first colliding column pair (0-based).
    """

    def __init__(self, pair):
        self.pair = pair
        super().__init__(f"duplicate column histograms at columns {pair}")


class ModelViolationError(AdvMatchError):
    """Inputs cannot have been produced by column deletion + row shuffling."""
