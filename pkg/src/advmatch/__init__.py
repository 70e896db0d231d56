"""Database matching under adversarial column deletions.

Histogram-based deletion detection followed by exact row matching, budgeted
deletion adversaries, analytic capacity/tail oracles and a Monte Carlo harness.
"""

from .core import (
    COLLISION,
    DETECTION,
    AlphabetDistribution,
    DeletionPattern,
    LabeledDatabase,
    LabelingPermutation,
    MatchEstimate,
    UnlabeledDatabase,
    apply_pattern_complement,
    hamming_distance,
)
from .errors import (
    AdvMatchError,
    CapacityError,
    ConfigError,
    DetectionError,
    ModelViolationError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "COLLISION",
    "DETECTION",
    "AlphabetDistribution",
    "DeletionPattern",
    "LabeledDatabase",
    "LabelingPermutation",
    "MatchEstimate",
    "UnlabeledDatabase",
    "apply_pattern_complement",
    "hamming_distance",
    "AdvMatchError",
    "CapacityError",
    "ConfigError",
    "DetectionError",
    "ModelViolationError",
    "UsageError",
]
