import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advmatch.adversary import (
    AdversaryStrategy,
    closest_row_pair,
    erroneous_rows,
    exhaustive_worst_pattern,
    greedy_cover_pattern,
    min_pair_pattern,
    random_pattern,
)
from advmatch.core import COLLISION, DeletionPattern, LabelingPermutation, UnlabeledDatabase
from advmatch.detection import check_uniqueness, column_histograms
from advmatch.errors import CapacityError, UsageError
from advmatch.generator import SeedSpec, make_labeled
from advmatch.matching import match_pipeline
from advmatch.neighbors import closest_pair


def _db(rows, k=5):
    return UnlabeledDatabase(np.array(rows), k)


def _random_db(seed, m, n, k=5):
    return UnlabeledDatabase(np.random.default_rng(seed).integers(1, k + 1, size=(m, n)), k)


class TestRandomPattern:
    def test_edges(self):
        assert random_pattern(5, 0, SeedSpec(1)).indices == ()
        assert random_pattern(5, 5, SeedSpec(1)).indices == (0, 1, 2, 3, 4)
        with pytest.raises(UsageError):
            random_pattern(3, 4, SeedSpec(1))

    def test_deterministic(self):
        assert random_pattern(20, 7, SeedSpec(3, 2)) == random_pattern(20, 7, SeedSpec(3, 2))

    def test_uniform_over_subsets(self):
        draws = 60000
        counts = Counter(random_pattern(4, 2, SeedSpec(9, t)).indices for t in range(draws))
        assert len(counts) == 6
        sigma = math.sqrt(draws * (1 / 6) * (5 / 6))
        for c in counts.values():
            assert abs(c - draws / 6) < 4 * sigma


class TestMinPair:
    def test_unique_differing_column(self):
        rows = [[1, 1, 1, 2], [1, 1, 2, 2], [3, 4, 5, 1], [5, 3, 4, 3]]
        assert min_pair_pattern(_db(rows), 1).one_based() == (3,)

    def test_identical_rows_pad(self):
        rows = [[1, 2, 3, 4, 5], [1, 2, 3, 4, 5], [5, 4, 3, 2, 1]]
        assert min_pair_pattern(_db(rows), 2).one_based() == (1, 2)

    def test_truncates_when_pair_too_far(self):
        rows = [[1, 1, 1, 1], [2, 2, 2, 2]]
        assert min_pair_pattern(_db(rows), 2).indices == (0, 1)

    def test_pads_after_differing_columns(self):
        rows = [[1, 1, 1, 1, 1], [1, 1, 1, 2, 1], [3, 3, 3, 3, 3]]
        assert min_pair_pattern(_db(rows), 3).indices == (0, 1, 3)

    def test_needs_two_rows(self):
        with pytest.raises(UsageError):
            min_pair_pattern(_db([[1, 2]]), 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 30), st.integers(1, 12), st.data())
    def test_emits_exactly_d_and_collides_close_pair(self, seed, m, n, data):
        db = _random_db(seed, m, n, 3)
        d = data.draw(st.integers(0, n))
        pattern = min_pair_pattern(db, d)
        assert pattern.d == d
        i, j, dist = closest_pair(db.entries)
        if dist <= d:
            kept = pattern.retained()
            assert np.array_equal(db.entries[i, kept], db.entries[j, kept])

    def test_pipeline_collides_closest_pair(self):
        hits = 0
        for seed in range(400):
            db = _random_db(seed, 64, 12)
            if check_uniqueness(column_histograms(db)) is not None:
                continue
            i, j, dist = closest_pair(db.entries)
            if dist > 3:
                continue
            perm = LabelingPermutation(np.random.default_rng(seed).permutation(64))
            est = match_pipeline(db, make_labeled(db, perm, min_pair_pattern(db, 3)))
            assert est.assignment[perm.forward[i]] == COLLISION
            assert est.assignment[perm.forward[j]] == COLLISION
            hits += 1
        assert hits > 5

    def test_sampled_pair_search_is_flagged(self):
        db = _random_db(1, 200, 10)
        pair = closest_row_pair(db, pair_sample=50, seed=SeedSpec(1))
        assert not pair.exact
        assert pair.distance == int(np.count_nonzero(db.entries[pair.i] != db.entries[pair.j]))
        assert closest_row_pair(db).exact
        assert AdversaryStrategy("min_pair", pair_sample=50).heuristic


class TestGreedyCover:
    def test_disjoint_pairs(self):
        rows = [
            [1, 1, 1, 1, 1, 1],
            [1, 2, 1, 1, 1, 1],
            [3, 3, 3, 3, 3, 3],
            [3, 3, 3, 3, 4, 3],
            [5, 4, 2, 5, 2, 4],
        ]
        assert greedy_cover_pattern(_db(rows), 2).one_based() == (2, 5)

    def test_zero_budget(self):
        assert greedy_cover_pattern(_random_db(0, 10, 5), 0).indices == ()

    def test_deterministic(self):
        db = _random_db(2, 32, 10)
        assert greedy_cover_pattern(db, 3) == greedy_cover_pattern(db, 3)

    def test_collides_at_least_as_many_rows_as_min_pair(self):
        for seed in range(100):
            db = _random_db(seed, 32, 10)
            assert erroneous_rows(db, greedy_cover_pattern(db, 3)) >= erroneous_rows(
                db, min_pair_pattern(db, 3)
            )


class TestExhaustive:
    def test_invulnerable_database_returns_first_pattern(self):
        rng = np.random.default_rng(0)
        while True:
            db = UnlabeledDatabase(rng.integers(1, 6, size=(8, 7)), 5)
            if check_uniqueness(column_histograms(db)) is None and closest_pair(db.entries)[2] > 2:
                break
        pattern, value = exhaustive_worst_pattern(db, 2)
        assert value == 0 and pattern.indices == (0, 1)

    @pytest.mark.parametrize("d", [0, 1, 3])
    def test_duplicate_rows_always_score(self, d):
        db = _random_db(4, 10, 6)
        db = UnlabeledDatabase(np.vstack([db.entries, db.entries[:1]]), 5)
        for combo in itertools.combinations(range(6), d):
            assert erroneous_rows(db, DeletionPattern(combo, 6)) >= 2
        assert exhaustive_worst_pattern(db, d)[1] >= 2

    def test_budget_guard(self):
        db = _random_db(0, 4, 30)
        with pytest.raises(CapacityError, match=r"C\(30,10\)"):
            exhaustive_worst_pattern(db, 10)

    def test_custom_objective_and_tie_break(self):
        db = _random_db(0, 4, 5)
        pattern, value = exhaustive_worst_pattern(db, 2, objective=lambda _db, p: -abs(p.indices[0] - 2))
        assert pattern.indices == (2, 3) and value == 0

    def test_dominates_heuristics(self):
        for seed in range(25):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(6, 13))
            d = int(rng.integers(1, 4))
            db = _random_db(seed, 24, n, 4)
            best = exhaustive_worst_pattern(db, d)[1]
            assert best >= erroneous_rows(db, greedy_cover_pattern(db, d))
            assert best >= erroneous_rows(db, min_pair_pattern(db, d))
            assert best >= erroneous_rows(db, random_pattern(n, d, SeedSpec(seed)))


class TestStrategy:
    def test_rejects_unknown(self):
        with pytest.raises(UsageError):
            AdversaryStrategy("sneaky")

    @pytest.mark.parametrize("kind", ["random", "min_pair", "greedy_cover", "exhaustive"])
    def test_every_kind_emits_d(self, kind):
        db = _random_db(1, 12, 8)
        for d in range(0, 9, 2):
            assert AdversaryStrategy(kind).choose(db, d, SeedSpec(0)).d == d

    def test_single_row_pads(self):
        db = _db([[1, 2, 3]])
        assert AdversaryStrategy("min_pair").choose(db, 2, SeedSpec(0)).indices == (0, 1)
