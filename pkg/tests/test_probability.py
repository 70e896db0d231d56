import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import (
    binom_cdf_exact,
    chernoff_sandwich_holds,
    chernoff_upper_exact,
    histogram_collision_bruteforce,
)

from advmatch.core import AlphabetDistribution
from advmatch.errors import CapacityError, UsageError
from advmatch.probability import (
    _EXACT_COMPOSITIONS,
    _collision_exact,
    adv_capacity,
    bernoulli_kl,
    binom_cdf,
    chernoff_sandwich,
    collision_param,
    composition_count,
    compositions,
    exact_histogram_collision,
    histogram_uniqueness_bound,
    log2_binom_cdf,
    log2_chernoff_bounds,
    random_capacity,
    shannon_entropy,
    zero_capacity_budget,
)

UNIF5 = AlphabetDistribution.uniform(5)
SKEW = AlphabetDistribution((0.9, 0.1))


def test_collision_param_unif5_is_exact():
    assert collision_param(UNIF5) == 0.2


def test_collision_param_skewed():
    assert collision_param(SKEW) == pytest.approx(0.82, abs=1e-15)


def test_entropy():
    assert shannon_entropy(UNIF5) == math.log2(5)
    # -0.9 log2 0.9 - 0.1 log2 0.1, evaluated at 40 digits
    assert shannon_entropy(SKEW) == pytest.approx(0.4689955935892812, abs=1e-15)


class TestKL:
    def test_zero_on_diagonal(self):
        assert bernoulli_kl(0.3, 0.3) == 0.0

    def test_edge_conventions(self):
        assert bernoulli_kl(0.0, 0.8) == pytest.approx(math.log2(5), abs=1e-15)
        assert bernoulli_kl(1.0, 0.5) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("a,b", [(-0.1, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
    def test_domain(self, a, b):
        with pytest.raises(UsageError):
            bernoulli_kl(a, b)

    @given(st.floats(0, 1), st.floats(1e-6, 1 - 1e-6))
    def test_nonnegative(self, a, b):
        assert bernoulli_kl(a, b) >= 0.0


class TestCapacities:
    def test_unif5_values(self):
        # D(0.2 || 0.8) = 0.2 log2(1/4) + 0.8 log2 4 = 1.2 exactly
        assert adv_capacity(UNIF5, 0.2) == pytest.approx(1.2, abs=1e-12)
        # 40-digit evaluation of D(0.25 || 0.8)
        assert adv_capacity(UNIF5, 0.25) == pytest.approx(1.0106499704282297, abs=1e-12)
        assert adv_capacity(UNIF5, 0.0) == pytest.approx(math.log2(5), abs=1e-12)
        assert random_capacity(UNIF5, 0.0) == pytest.approx(math.log2(5), abs=1e-12)

    def test_zero_beyond_threshold(self):
        assert zero_capacity_budget(UNIF5) == pytest.approx(0.8)
        for delta in (0.8, 0.85, 0.9, 1.0):
            assert adv_capacity(UNIF5, delta) == 0.0
            if delta < 1.0:
                assert random_capacity(UNIF5, delta) > 0

    def test_skewed_law_differs_at_zero_budget(self):
        assert adv_capacity(SKEW, 0.0) == pytest.approx(0.286304185156641, abs=1e-12)
        assert random_capacity(SKEW, 0.0) == pytest.approx(0.4689955935892812, abs=1e-12)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_adv_nonincreasing_and_below_random(self, x, y):
        lo, hi = sorted((x, y))
        assert adv_capacity(UNIF5, lo) >= adv_capacity(UNIF5, hi)
        assert adv_capacity(UNIF5, lo) <= random_capacity(UNIF5, lo) + 1e-12

    def test_rejects_budget_outside_unit_interval(self):
        with pytest.raises(UsageError):
            adv_capacity(UNIF5, 1.2)


class TestBinomialTails:
    def test_frozen_values(self):
        # exact rational evaluation: 6.219776e-05 and 1.0027467142070271e-08
        assert binom_cdf(12, 0.8, 3) == pytest.approx(6.219776e-05, rel=1e-12)
        assert binom_cdf(24, 0.8, 6) == pytest.approx(1.0027467142070271e-08, rel=1e-12)

    def test_full_range_is_one(self):
        assert log2_binom_cdf(10, 0.3, 10) == 0.0

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_degenerate_p(self, p):
        assert binom_cdf(5, p, 2) == (1.0 if p == 0.0 else 0.0)

    @settings(max_examples=60)
    @given(st.integers(1, 120), st.data(), st.sampled_from([Fraction(1, 5), Fraction(1, 2), Fraction(9, 10)]))
    def test_matches_rational_oracle(self, n, data, p):
        k = data.draw(st.integers(0, n))
        exact = binom_cdf_exact(n, p, k)
        assert binom_cdf(n, float(p), k) == pytest.approx(float(exact), rel=1e-10, abs=1e-300)

    def test_chernoff_frozen(self):
        lo, hi = chernoff_sandwich(12, 0.2, 3)
        assert hi == pytest.approx(2.2344391155331971e-4, rel=1e-12)
        assert lo == pytest.approx(4.561029745310069e-5, rel=1e-12)
        assert lo <= binom_cdf(12, 0.8, 3) <= hi

    def test_chernoff_matches_rational_form(self):
        _, hi = log2_chernoff_bounds(30, 0.5, 7)
        assert 2.0**hi == pytest.approx(float(chernoff_upper_exact(30, Fraction(1, 2), 7)), rel=1e-12)

    def test_chernoff_rejects_large_budget(self):
        with pytest.raises(UsageError):
            log2_chernoff_bounds(10, 0.2, 9)

    @settings(max_examples=40)
    @given(st.integers(8, 60), st.data())
    def test_sandwich_property(self, n, data):
        d = data.draw(st.integers(0, int(0.8 * n)))
        assert chernoff_sandwich_holds(n, Fraction(4, 5), d)
        lo, hi = log2_chernoff_bounds(n, 0.2, d)
        assert lo <= log2_binom_cdf(n, 0.8, d) <= hi + 1e-9


class TestHistogramCollision:
    def test_compositions(self):
        c = compositions(2, 3)
        assert c.tolist() == [[0, 0, 2], [0, 1, 1], [0, 2, 0], [1, 0, 1], [1, 1, 0], [2, 0, 0]]
        assert composition_count(2, 3) == 6
        assert (c.sum(axis=1) == 2).all()

    def test_known_values(self):
        assert exact_histogram_collision(2, AlphabetDistribution.uniform(2)) == 0.375
        assert exact_histogram_collision(1, UNIF5) == collision_param(UNIF5)
        assert exact_histogram_collision(0, UNIF5) == 1.0

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("probs", [(0.5, 0.5), (0.2, 0.3, 0.5), (0.25,) * 4])
    def test_matches_bruteforce(self, m, probs):
        dist = AlphabetDistribution(probs)
        exact = histogram_collision_bruteforce(m, dist.exact_probs())
        assert exact_histogram_collision(m, dist) == pytest.approx(float(exact), rel=1e-12)

    def test_float_path_agrees_with_exact_path(self):
        # 20 items over 5 bins: 10626 compositions, past the rational cutoff
        dist = AlphabetDistribution((0.1, 0.2, 0.3, 0.25, 0.15))
        assert composition_count(20, 5) > _EXACT_COMPOSITIONS
        value = exact_histogram_collision(20, dist)
        assert value == pytest.approx(_collision_exact(20, dist.exact_probs()), rel=1e-9)

    def test_guard(self):
        with pytest.raises(CapacityError, match="guard"):
            exact_histogram_collision(1024, UNIF5)

    def test_union_bound(self):
        p = exact_histogram_collision(8, UNIF5)
        assert histogram_uniqueness_bound(3, 8, UNIF5) == pytest.approx(9 * p)
        assert histogram_uniqueness_bound(100, 2, UNIF5) == 1.0

    def test_decreasing_in_m(self):
        values = [exact_histogram_collision(m, UNIF5) for m in (4, 8, 16, 32)]
        assert all(a > b for a, b in zip(values, values[1:]))
