"""Exact row matching after deletion detection, and scoring."""

from __future__ import annotations

import numpy as np

from .core import (
    COLLISION,
    DeletionPattern,
    LabeledDatabase,
    LabelingPermutation,
    MatchEstimate,
    UnlabeledDatabase,
)
from .detection import column_histograms, detect_deletions
from .errors import DetectionError, UsageError


def project_retained(db: UnlabeledDatabase, pattern: DeletionPattern) -> np.ndarray:
    """``db`` restricted to the retained columns (row and column order kept)."""
    if pattern.n != db.cols:
        raise UsageError(f"pattern over {pattern.n} columns, database has {db.cols}")
    out = db.entries[:, pattern.retained()]
    out.flags.writeable = False
    return out


def _entries(x) -> np.ndarray:
    return x.entries if hasattr(x, "entries") else np.asarray(x)


def _row_keys(a: np.ndarray) -> np.ndarray:
    """One opaque, comparable key per row (the row's raw bytes)."""
    a = np.ascontiguousarray(a)
    width = a.shape[1] * a.itemsize
    if width == 0:
        return np.zeros(a.shape[0], dtype=np.int8)
    return a.view(np.dtype((np.void, width))).ravel()


def exact_match(reduced, d2) -> MatchEstimate:
    """Assign each labeled row to the unique reduced row equal to it.

    Rows with zero or several equal candidates get ``COLLISION``; the zero case
    cannot arise from honestly generated inputs.
    """
    a, b = _entries(reduced), _entries(d2)
    if a.shape != b.shape or a.ndim != 2:
        raise UsageError(f"shape mismatch: {a.shape} vs {b.shape}")
    m = a.shape[0]
    dtype = np.promote_types(a.dtype, b.dtype)
    keys = np.concatenate([_row_keys(a.astype(dtype, copy=False)), _row_keys(b.astype(dtype, copy=False))])
    _, inv = np.unique(keys, return_inverse=True)
    inv = inv.ravel()
    inv1, inv2 = inv[:m], inv[m:]
    groups = int(inv.max()) + 1
    count1 = np.bincount(inv1, minlength=groups)
    first1 = np.full(groups, -1, dtype=np.int64)
    first1[inv1[::-1]] = np.arange(m - 1, -1, -1)
    assignment = np.where(count1[inv2] == 1, first1[inv2], COLLISION)
    return MatchEstimate(assignment, m)


def exact_match_naive(reduced, d2) -> MatchEstimate:
    """Quadratic reference implementation of :func:`exact_match`."""
    a, b = _entries(reduced), _entries(d2)
    if a.shape != b.shape or a.ndim != 2:
        raise UsageError(f"shape mismatch: {a.shape} vs {b.shape}")
    m = a.shape[0]
    assignment = np.full(m, COLLISION, dtype=np.int64)
    for l in range(m):
        hits = [i for i in range(m) if np.array_equal(a[i], b[l])]
        if len(hits) == 1:
            assignment[l] = hits[0]
    return MatchEstimate(assignment, m)


def match_pipeline(d1: UnlabeledDatabase, d2: LabeledDatabase) -> MatchEstimate:
    """Histograms, uniqueness gate, deletion detection, projection, exact match.

    A failed uniqueness gate flags every row with ``DETECTION``. A single row
    has nothing to be confused with and is matched without detection.
    """
    if d2.rows != d1.rows:
        raise UsageError(f"row counts differ: {d1.rows} vs {d2.rows}")
    if d2.cols > d1.cols:
        raise UsageError(f"labeled database has more columns ({d2.cols}) than unlabeled ({d1.cols})")
    if d1.rows == 1:
        return MatchEstimate(np.zeros(1, dtype=np.int64), 1)
    try:
        pattern = detect_deletions(column_histograms(d1), column_histograms(d2))
    except DetectionError:
        return MatchEstimate.detection_failure(d2.rows, d1.rows)
    return exact_match(project_retained(d1, pattern), d2)


def score(est: MatchEstimate, truth: LabelingPermutation) -> float:
    """Fraction of labeled rows not matched to their true source row."""
    if est.assignment.shape[0] != truth.size:
        raise UsageError("estimate and permutation sizes differ")
    return float(np.count_nonzero(est.assignment != truth.inverse)) / truth.size
