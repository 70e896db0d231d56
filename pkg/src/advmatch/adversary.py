"""Budgeted column-deletion adversaries.

Each strategy sees the unlabeled database and returns exactly ``d`` columns to
delete. Ties are broken lexicographically everywhere, so every strategy except
``random`` is a deterministic function of the database.

Deleting the columns on which two rows differ makes the rows identical after
projection, so a pair at Hamming distance ``t <= d`` can always be forced into
a collision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DeletionPattern, LabelingPermutation, UnlabeledDatabase
from .errors import CapacityError, UsageError
from .generator import PURPOSE_PAIR_SAMPLE, PURPOSE_PATTERN, SeedSpec, make_labeled
from .matching import match_pipeline
from .neighbors import closest_pair, pairs_within

STRATEGIES = ("random", "min_pair", "greedy_cover", "exhaustive")
EXHAUSTIVE_BUDGET = 10**5
DEFAULT_PAIR_SAMPLE = 1 << 20

Objective = Callable[[UnlabeledDatabase, DeletionPattern], float]


@dataclass(frozen=True)
class RowPair:
    i: int
    j: int
    distance: int
    exact: bool = True


def _check_budget(n: int, d: int) -> None:
    if not 0 <= d <= n:
        raise UsageError(f"need 0 <= d <= n, got d={d}, n={n}")


def _check_rows(db: UnlabeledDatabase) -> None:
    if db.rows < 2:
        raise UsageError("the strategy needs at least two rows")


def _pad(columns, n: int, d: int) -> DeletionPattern:
    """Keep the ``d`` smallest of ``columns``, then top up with the smallest
    remaining column indices."""
    chosen = sorted(set(int(c) for c in columns))[:d]
    taken = set(chosen)
    for c in range(n):
        if len(chosen) == d:
            break
        if c not in taken:
            chosen.append(c)
    return DeletionPattern(tuple(sorted(chosen)), n)


def differing_columns(a, b) -> np.ndarray:
    return np.flatnonzero(np.asarray(a) != np.asarray(b))


def random_pattern(n: int, d: int, seed: SeedSpec) -> DeletionPattern:
    """Uniform ``d``-subset of the ``n`` columns (an oblivious adversary)."""
    _check_budget(n, d)
    picked = seed.rng(PURPOSE_PATTERN).choice(n, size=d, replace=False)
    return DeletionPattern(tuple(sorted(int(c) for c in picked)), n)


def closest_row_pair(
    db: UnlabeledDatabase, pair_sample: Optional[int] = None, seed: Optional[SeedSpec] = None
) -> RowPair:
    """Closest pair of rows, ties to the smallest ``(i, j)``.

    The search is exact unless ``pair_sample`` is given, in which case only that
    many uniformly drawn pairs are compared and the result is flagged inexact.
    """
    _check_rows(db)
    rows = db.entries
    m = db.rows
    if pair_sample is None or pair_sample >= m * (m - 1) // 2:
        i, j, dist = closest_pair(rows)
        return RowPair(i, j, dist)
    if seed is None:
        raise UsageError("sampled pair search needs a seed")
    rng = seed.rng(PURPOSE_PAIR_SAMPLE)
    a = rng.integers(0, m, size=pair_sample)
    b = rng.integers(0, m - 1, size=pair_sample)
    b = b + (b >= a)
    i, j = np.minimum(a, b), np.maximum(a, b)
    dist = np.count_nonzero(rows[i] != rows[j], axis=1)
    best = np.lexsort((j, i, dist))[0]
    return RowPair(int(i[best]), int(j[best]), int(dist[best]), exact=False)


def min_pair_pattern(
    db: UnlabeledDatabase,
    d: int,
    pair_sample: Optional[int] = None,
    seed: Optional[SeedSpec] = None,
) -> DeletionPattern:
    """Delete the columns separating the closest pair of rows.

    If that pair differs in more than ``d`` columns, the ``d`` smallest of them
    are deleted; otherwise the set is padded with the smallest other columns.
    """
    _check_budget(db.cols, d)
    pair = closest_row_pair(db, pair_sample, seed)
    diff = differing_columns(db.entries[pair.i], db.entries[pair.j])
    return _pad(diff, db.cols, d)


def greedy_cover_pattern(db: UnlabeledDatabase, d: int) -> DeletionPattern:
    """Accumulate the differing columns of row pairs, closest pairs first,
    while the union stays within budget; then pad to ``d``."""
    _check_budget(db.cols, d)
    _check_rows(db)
    chosen: set[int] = set()
    if d > 0:
        rows = db.entries
        for i, j, _ in zip(*pairs_within(rows, d)):
            if len(chosen) == d:
                break
            diff = differing_columns(rows[i], rows[j]).tolist()
            if len(chosen.union(diff)) <= d:
                chosen.update(diff)
    return _pad(chosen, db.cols, d)


def erroneous_rows(db: UnlabeledDatabase, pattern: DeletionPattern) -> float:
    """Rows the full pipeline fails to match (collision or detection error)."""
    labeled = make_labeled(db, LabelingPermutation.identity(db.rows), pattern)
    est = match_pipeline(db, labeled)
    return float(est.assignment.shape[0] - np.count_nonzero(est.matched))


def exhaustive_worst_pattern(
    db: UnlabeledDatabase,
    d: int,
    objective: Optional[Objective] = None,
    budget: int = EXHAUSTIVE_BUDGET,
) -> tuple[DeletionPattern, float]:
    """Evaluate ``objective`` on every ``d``-subset and return a maximiser.

    The first maximiser in lexicographic order wins. The default objective is
    :func:`erroneous_rows`.
    """
    n = db.cols
    _check_budget(n, d)
    total = math.comb(n, d)
    if total > budget:
        raise CapacityError(
            f"C({n},{d}) = {total} deletion patterns exceed the evaluation budget {budget}"
        )
    objective = objective or erroneous_rows
    best_pattern, best_value = None, -math.inf
    for combo in itertools.combinations(range(n), d):
        pattern = DeletionPattern(combo, n)
        value = objective(db, pattern)
        if value > best_value:
            best_pattern, best_value = pattern, value
    return best_pattern, best_value


@dataclass(frozen=True)
class AdversaryStrategy:
    """A named strategy plus its parameters.

    ``pair_sample`` switches ``min_pair`` to the sampled (heuristic) search;
    ``budget`` bounds the ``exhaustive`` enumeration.
    """

    kind: str = "min_pair"
    budget: int = EXHAUSTIVE_BUDGET
    pair_sample: Optional[int] = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise UsageError(f"unknown strategy {self.kind!r}; choose from {', '.join(STRATEGIES)}")
        if self.budget < 1:
            raise UsageError("exhaustive budget must be positive")
        if self.pair_sample is not None and self.pair_sample < 1:
            raise UsageError("pair_sample must be positive")

    @property
    def heuristic(self) -> bool:
        return self.kind == "min_pair" and self.pair_sample is not None

    def choose(self, db: UnlabeledDatabase, d: int, seed: SeedSpec) -> DeletionPattern:
        n = db.cols
        _check_budget(n, d)
        if self.kind == "random":
            return random_pattern(n, d, seed)
        if db.rows < 2:
            # no pair to separate: any pattern is as good as another
            return _pad((), n, d)
        if self.kind == "min_pair":
            return min_pair_pattern(db, d, self.pair_sample, seed)
        if self.kind == "greedy_cover":
            return greedy_cover_pattern(db, d)
        return exhaustive_worst_pattern(db, d, budget=self.budget)[0]
