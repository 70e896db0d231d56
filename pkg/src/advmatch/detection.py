"""Column-histogram fingerprints and deletion-pattern recovery.

Row shuffling leaves every column's histogram unchanged, so each retained
column of the labeled database carries the same histogram as its source
column. When all source histograms are distinct, the deleted columns are
exactly those whose histogram is missing from the labeled database.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DeletionPattern, _SymbolMatrix
from .errors import DetectionError, ModelViolationError, UsageError


@dataclass(frozen=True, eq=False)
class HistogramMatrix:
    """``counts[s - 1, j]`` = number of rows holding symbol ``s`` in column ``j``."""

    counts: np.ndarray
    rows: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise UsageError("histogram matrix must be 2-D")
        if counts.shape[1] and not (counts.sum(axis=0) == self.rows).all():
            raise UsageError("every histogram column must sum to the row count")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def columns(self) -> int:
        return self.counts.shape[1]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(self.counts[:, j].tolist())

    def column_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(col) for col in self.counts.T.tolist()]

    def __eq__(self, other):
        return (
            isinstance(other, HistogramMatrix)
            and self.rows == other.rows
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None


def column_histograms(db: _SymbolMatrix) -> HistogramMatrix:
    m, n = db.shape
    k = db.alphabet_size
    flat = (db.entries.astype(np.int64) - 1) + k * np.arange(n, dtype=np.int64)
    counts = np.bincount(flat.ravel(), minlength=k * n).reshape(n, k).T
    return HistogramMatrix(counts, m)


def check_uniqueness(h: HistogramMatrix) -> Optional[tuple[int, int]]:
    """``None`` when all columns differ, else the first duplicate pair ``(i, j)``
    (smallest ``j``, then the earliest ``i`` sharing its histogram)."""
    seen: dict[tuple[int, ...], int] = {}
    for j, col in enumerate(h.column_tuples()):
        if col in seen:
            return seen[col], j
        seen[col] = j
    return None


def detect_deletions(h1: HistogramMatrix, h2: HistogramMatrix) -> DeletionPattern:
    """Recover the deleted columns from the two histogram matrices.

    Raises ``DetectionError`` if ``h1`` has duplicate columns and
    ``ModelViolationError`` if ``h2`` is not an order-preserving sub-sequence
    of ``h1``'s columns.
    """
    n, kept = h1.columns, h2.columns
    if kept > n:
        raise UsageError(f"labeled database has more columns ({kept}) than unlabeled ({n})")
    if h1.rows != h2.rows:
        raise UsageError(f"row counts differ: {h1.rows} vs {h2.rows}")
    if h1.counts.shape[0] != h2.counts.shape[0]:
        raise UsageError("histograms use different alphabets")
    dup = check_uniqueness(h1)
    if dup is not None:
        raise DetectionError(dup)
    present = set(h2.column_tuples())
    cols1 = h1.column_tuples()
    deleted = [j for j, col in enumerate(cols1) if col not in present]
    if len(deleted) != n - kept:
        raise ModelViolationError(
            f"{len(deleted)} columns look deleted but the labeled database lacks {n - kept}"
        )
    pattern = DeletionPattern(tuple(deleted), n)
    if [cols1[j] for j in pattern.retained()] != h2.column_tuples():
        raise ModelViolationError("retained columns appear out of order")
    return pattern
