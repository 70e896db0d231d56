import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advmatch.adversary import min_pair_pattern
from advmatch.core import (
    COLLISION,
    DETECTION,
    DeletionPattern,
    LabeledDatabase,
    LabelingPermutation,
    MatchEstimate,
    UnlabeledDatabase,
)
from advmatch.detection import check_uniqueness, column_histograms
from advmatch.errors import UsageError
from advmatch.generator import make_labeled
from advmatch.matching import exact_match, exact_match_naive, match_pipeline, project_retained, score
from advmatch.neighbors import closest_pair


def test_project_retained():
    db = UnlabeledDatabase(np.arange(25).reshape(5, 5) % 5 + 1, 5)
    out = project_retained(db, DeletionPattern.from_one_based((2, 5), 5))
    assert np.array_equal(out, db.entries[:, [0, 2, 3]])
    assert np.array_equal(project_retained(db, DeletionPattern.empty(5)), db.entries)
    with pytest.raises(UsageError):
        project_retained(db, DeletionPattern.empty(4))


def test_project_then_histograms_is_subsequence():
    db = UnlabeledDatabase(np.random.default_rng(0).integers(1, 4, size=(20, 6)), 3)
    pattern = DeletionPattern((1, 4), 6)
    h = column_histograms(db).column_tuples()
    reduced = LabeledDatabase(project_retained(db, pattern), 3)
    assert column_histograms(reduced).column_tuples() == [h[j] for j in pattern.retained()]


def test_exact_match_recovers_permutation():
    a = np.array([[1, 2], [2, 1], [2, 2]])
    perm = LabelingPermutation(np.array([1, 2, 0]))
    est = exact_match(a, a[perm.inverse])
    assert list(est.assignment) == list(perm.inverse)
    assert score(est, perm) == 0.0


def test_exact_match_duplicates_collide():
    a = np.array([[1, 1], [1, 1]])
    est = exact_match(a, a)
    assert list(est.assignment) == [COLLISION, COLLISION]


def test_exact_match_missing_row_collides():
    est = exact_match(np.array([[1, 1], [2, 2]]), np.array([[1, 2], [2, 2]]))
    assert list(est.assignment) == [COLLISION, 1]


def test_exact_match_zero_columns():
    est = exact_match(np.zeros((3, 0), np.uint8), np.zeros((3, 0), np.uint8))
    assert list(est.assignment) == [COLLISION] * 3
    assert list(exact_match(np.zeros((1, 0), np.uint8), np.zeros((1, 0), np.uint8)).assignment) == [0]


def test_exact_match_shape_mismatch():
    with pytest.raises(UsageError):
        exact_match(np.ones((2, 2)), np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 512), st.integers(0, 6), st.integers(2, 3))
def test_hashing_equals_naive(seed, m, K, k):
    rng = np.random.default_rng(seed)
    a = rng.integers(1, k + 1, size=(m, K)).astype(np.uint8)
    b = a[rng.permutation(m)]
    if m > 1 and K:
        b[0] = rng.integers(1, k + 1, size=K)
    assert exact_match(a, b) == exact_match_naive(a, b)


def test_pipeline_two_rows_at_distance_five():
    # seven agreeing columns holding 1..7 and five differing ones {1,2}..{1,6}:
    # every column histogram is distinct, so detection succeeds
    a = [1, 2, 3, 4, 5, 6, 7, 1, 1, 1, 1, 1]
    b = [1, 2, 3, 4, 5, 6, 7, 2, 3, 4, 5, 6]
    db = UnlabeledDatabase(np.array([a, b]), 7)
    assert check_uniqueness(column_histograms(db)) is None
    perm = LabelingPermutation(np.array([1, 0]))
    est = match_pipeline(db, make_labeled(db, perm, min_pair_pattern(db, 5)))
    assert list(est.assignment) == [COLLISION, COLLISION]
    est = match_pipeline(db, make_labeled(db, perm, min_pair_pattern(db, 4)))
    assert list(est.assignment) == [1, 0]
    assert score(est, perm) == 0.0


def test_pipeline_min_pair_budget_threshold():
    # rows 0 and 1 differ in five columns; extra rows make every histogram distinct
    rng = np.random.default_rng(7)
    for _ in range(200):
        extra = rng.integers(1, 6, size=(14, 12))
        a = rng.integers(1, 6, size=12)
        b = a.copy()
        b[[0, 2, 4, 6, 8]] = a[[0, 2, 4, 6, 8]] % 5 + 1
        entries = np.vstack([a, b, extra])
        db = UnlabeledDatabase(entries, 5)
        if check_uniqueness(column_histograms(db)) is not None:
            continue
        if closest_pair(entries)[:2] != (0, 1):
            continue
        perm = LabelingPermutation(rng.permutation(16))
        est5 = match_pipeline(db, make_labeled(db, perm, min_pair_pattern(db, 5)))
        assert est5.assignment[perm.forward[0]] == COLLISION
        assert est5.assignment[perm.forward[1]] == COLLISION
        est4 = match_pipeline(db, make_labeled(db, perm, min_pair_pattern(db, 4)))
        assert est4.assignment[perm.forward[0]] == 0
        assert est4.assignment[perm.forward[1]] == 1
        return
    pytest.fail("no suitable instance generated")


def test_pipeline_detection_failure_flags_all():
    db = UnlabeledDatabase(np.array([[1, 1, 2], [2, 2, 1], [1, 1, 1]]), 2)
    perm = LabelingPermutation.identity(3)
    est = match_pipeline(db, make_labeled(db, perm, DeletionPattern((2,), 3)))
    assert est.detection_error
    assert (est.assignment == DETECTION).all()
    assert score(est, perm) == 1.0


def test_pipeline_single_row_always_matches():
    db = UnlabeledDatabase(np.array([[1, 1, 1, 1]]), 2)
    est = match_pipeline(db, make_labeled(db, LabelingPermutation.identity(1), DeletionPattern((0, 2), 4)))
    assert list(est.assignment) == [0]


def test_achievability_exhaustive_small():
    rng = np.random.default_rng(3)
    tested = 0
    while tested < 20:
        n = int(rng.integers(4, 9))
        db = UnlabeledDatabase(rng.integers(1, 6, size=(16, n)), 5)
        if check_uniqueness(column_histograms(db)) is not None:
            continue
        dmin = closest_pair(db.entries)[2]
        perm = LabelingPermutation(rng.permutation(16))
        for d in range(min(dmin, 4)):
            for combo in itertools.combinations(range(n), d):
                est = match_pipeline(db, make_labeled(db, perm, DeletionPattern(combo, n)))
                assert score(est, perm) == 0.0
        tested += 1


def test_score():
    perm = LabelingPermutation(np.array([1, 0, 2, 3]))
    perfect = MatchEstimate(perm.inverse.copy(), 4)
    assert score(perfect, perm) == 0.0
    one_pair = MatchEstimate(np.array([COLLISION, COLLISION, 2, 3]), 4)
    assert score(one_pair, perm) == 0.5
    assert score(MatchEstimate.detection_failure(4, 4), perm) == 1.0
