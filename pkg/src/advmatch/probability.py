"""Analytic quantities: collision parameter, entropies, Bernoulli KL divergence,
matching capacities, log-domain binomial tails and histogram-collision oracles.

All logarithms are base 2. Tail probabilities are computed as log2 values;
the linear-scale wrappers exist only for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import AlphabetDistribution
from .errors import CapacityError, UsageError

LN2 = math.log(2.0)
COMPOSITION_GUARD = 10**7
# beyond this many compositions the oracle switches from exact rationals to floats
_EXACT_COMPOSITIONS = 5000


@dataclass(frozen=True)
class CapacityPoint:
    delta: float
    adv_bits: float
    random_bits: float


def collision_param(dist: AlphabetDistribution) -> float:
    """Probability that two independent entries coincide, ``sum p(x)^2``.

    Evaluated exactly and rounded once, so a uniform law over ``k`` symbols
    gives exactly ``1/k``.
    """
    return float(sum(p * p for p in dist.exact_probs()))


def shannon_entropy(dist: AlphabetDistribution) -> float:
    if dist.is_uniform:
        return math.log2(dist.size)
    return -math.fsum(p * math.log2(p) for p in dist.probs)


def bernoulli_kl(a: float, b: float) -> float:
    """KL divergence ``D(a || b)`` between Bernoulli laws, in bits (0 log 0 = 0)."""
    if not 0.0 <= a <= 1.0:
        raise UsageError(f"first argument must lie in [0, 1], got {a}")
    if not 0.0 < b < 1.0:
        raise UsageError(f"second argument must lie in (0, 1), got {b}")
    if a == b:
        return 0.0
    total = 0.0
    if a > 0.0:
        total += a * math.log2(a / b)
    if a < 1.0:
        total += (1.0 - a) * math.log2((1.0 - a) / (1.0 - b))
    return max(total, 0.0)


def zero_capacity_budget(dist: AlphabetDistribution) -> float:
    """Budget ``1 - qhat`` at and beyond which the adversarial capacity vanishes."""
    return 1.0 - collision_param(dist)


def adv_capacity(dist: AlphabetDistribution, delta: float) -> float:
    if not 0.0 <= delta <= 1.0:
        raise UsageError(f"delta must lie in [0, 1], got {delta}")
    threshold = zero_capacity_budget(dist)
    if delta >= threshold:
        return 0.0
    return bernoulli_kl(delta, threshold)


def random_capacity(dist: AlphabetDistribution, delta: float) -> float:
    if not 0.0 <= delta <= 1.0:
        raise UsageError(f"delta must lie in [0, 1], got {delta}")
    return (1.0 - delta) * shannon_entropy(dist)


def capacity_point(dist: AlphabetDistribution, delta: float) -> CapacityPoint:
    return CapacityPoint(delta, adv_capacity(dist, delta), random_capacity(dist, delta))


# --------------------------------------------------------------------------
# Binomial tails
# --------------------------------------------------------------------------

def _check_binom(n: int, p: float, k: int) -> None:
    if n < 0 or not 0 <= k <= n:
        raise UsageError(f"need 0 <= k <= n, got n={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"p must lie in [0, 1], got {p}")


def log2_binom_pmf(n: int, p: float, ks) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_coef = gammaln(n + 1.0) - gammaln(ks + 1.0) - gammaln(n - ks + 1.0)
        succ = np.where(ks > 0, ks * math.log(p) if p > 0 else -np.inf, 0.0)
        fail = np.where(n - ks > 0, (n - ks) * math.log1p(-p) if p < 1 else -np.inf, 0.0)
    return (log_coef + succ + fail) / LN2


def log2_binom_cdf(n: int, p: float, k: int) -> float:
    """``log2 Pr(X <= k)`` for ``X ~ Binom(n, p)``, summed in the log domain."""
    _check_binom(n, p, k)
    if k == n:
        return 0.0
    terms = log2_binom_pmf(n, p, np.arange(k + 1)) * LN2
    return min(float(logsumexp(terms)) / LN2, 0.0)


def binom_cdf(n: int, p: float, k: int) -> float:
    return 2.0 ** log2_binom_cdf(n, p, k)


def log2_chernoff_bounds(n: int, qhat: float, d: int) -> tuple[float, float]:
    """log2 of the lower/upper bounds on ``Pr(Binom(n, 1 - qhat) <= d)``.

    Upper: ``-n D(d/n || 1 - qhat)``; lower: the same minus ``log2 sqrt(2n)``.
    Valid only while ``d / n <= 1 - qhat``.
    """
    if n < 1 or not 0 <= d <= n:
        raise UsageError(f"need 0 <= d <= n and n >= 1, got n={n}, d={d}")
    if not 0.0 < qhat < 1.0:
        raise UsageError(f"qhat must lie in (0, 1), got {qhat}")
    if d / n > (1.0 - qhat) + 1e-12:
        raise UsageError(
            f"budget d/n={d / n} exceeds 1 - qhat={1 - qhat}; the tail bounds do not apply"
        )
    upper = -n * bernoulli_kl(d / n, 1.0 - qhat)
    return upper - 0.5 * math.log2(2 * n), upper


def chernoff_sandwich(n: int, qhat: float, d: int) -> tuple[float, float]:
    lo, hi = log2_chernoff_bounds(n, qhat, d)
    return 2.0**lo, 2.0**hi


# --------------------------------------------------------------------------
# Histogram collisions
# --------------------------------------------------------------------------

def composition_count(m: int, k: int) -> int:
    """Number of histograms of ``m`` items over ``k`` bins."""
    return math.comb(m + k - 1, k - 1)


def compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``,
    in lexicographic order."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = compositions(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.concatenate(blocks)


def _collision_exact(m: int, probs: tuple[Fraction, ...]) -> float:
    fact = [math.factorial(i) for i in range(m + 1)]
    total = Fraction(0)
    for h in compositions(m, len(probs)).tolist():
        coef = fact[m]
        for c in h:
            coef //= fact[c]
        pmf = Fraction(coef)
        for p, c in zip(probs, h):
            pmf *= p**c
        total += pmf * pmf
    return float(total)


def _collision_float(m: int, log_p: np.ndarray) -> float:
    k = log_p.shape[0]
    pieces = []
    # fix the first bin and enumerate the rest, bounding peak memory
    for first in range(m + 1):
        rest = compositions(m - first, k - 1)
        h = np.column_stack([np.full(len(rest), first, dtype=np.int64), rest])
        logpmf = gammaln(m + 1.0) - gammaln(h + 1.0).sum(axis=1) + (h * log_p).sum(axis=1)
        pieces.append(logsumexp(2.0 * logpmf))
    return float(np.exp(logsumexp(pieces)))


def exact_histogram_collision(
    m: int, dist: AlphabetDistribution, guard: int = COMPOSITION_GUARD
) -> float:
    """Probability that two independent ``m``-entry columns share a histogram.

    Sums the squared multinomial pmf over every histogram of ``m`` items into
    ``k`` bins. Raises ``CapacityError`` when the number of histograms exceeds
    ``guard``; use the Monte Carlo estimator in ``experiments`` instead.
    """
    if m < 0:
        raise UsageError("m must be nonnegative")
    count = composition_count(m, dist.size)
    if count > guard:
        raise CapacityError(
            f"{count} histograms of {m} items over {dist.size} symbols exceed the "
            f"enumeration guard {guard}; estimate by Monte Carlo instead"
        )
    if count <= _EXACT_COMPOSITIONS:
        return _collision_exact(m, dist.exact_probs())
    with np.errstate(divide="ignore"):
        return _collision_float(m, np.log(dist.as_array()))


def histogram_uniqueness_bound(
    n: int, m: int, dist: AlphabetDistribution, guard: int = COMPOSITION_GUARD
) -> float:
    """Union bound ``min(1, n^2 Pr(two columns share a histogram))`` on the
    probability that some pair among ``n`` columns collides."""
    if n < 1:
        raise UsageError("n must be positive")
    return min(1.0, n * n * exact_histogram_collision(m, dist, guard))
