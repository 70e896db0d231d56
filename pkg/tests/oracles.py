"""Independent reference implementations used to check the package.

Everything here is deliberately naive: exact rationals, full enumeration or
double loops, sharing no code with ``advmatch``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction
from math import comb

import numpy as np


def binom_cdf_exact(n: int, p: Fraction, k: int) -> Fraction:
    return sum((comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(k + 1)), Fraction(0))


def chernoff_upper_exact(n: int, p: Fraction, d: int) -> Fraction:
    """``2^(-n D(d/n || p))`` as an exact rational:
    ``p^d (1-p)^(n-d) n^n / (d^d (n-d)^(n-d))`` with ``0^0 = 1``."""
    num = p**d * (1 - p) ** (n - d) * Fraction(n) ** n
    den = Fraction(d) ** d * Fraction(n - d) ** (n - d)
    return num / den


def chernoff_sandwich_holds(n: int, p: Fraction, d: int) -> bool:
    """``upper / sqrt(2n) <= cdf <= upper``, squared to stay in rationals."""
    cdf = binom_cdf_exact(n, p, d)
    upper = chernoff_upper_exact(n, p, d)
    return cdf <= upper and upper * upper <= 2 * n * cdf * cdf


def histogram_collision_bruteforce(m: int, probs) -> Fraction:
    """Pr(two i.i.d. length-``m`` columns share a histogram), by enumerating
    every column."""
    k = len(probs)
    law: dict[tuple, Fraction] = {}
    for seq in itertools.product(range(k), repeat=m):
        pr = Fraction(1)
        for s in seq:
            pr *= probs[s]
        counts = Counter(seq)
        h = tuple(counts.get(i, 0) for i in range(k))
        law[h] = law.get(h, Fraction(0)) + pr
    return sum((v * v for v in law.values()), Fraction(0))


def hamming(a, b) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def vulnerable_mask_naive(rows, d: int) -> np.ndarray:
    rows = [list(r) for r in np.asarray(rows).tolist()]
    m = len(rows)
    out = np.zeros(m, dtype=bool)
    for i in range(m):
        for j in range(m):
            if i != j and hamming(rows[i], rows[j]) <= d:
                out[i] = True
                break
    return out


def pairs_within_naive(rows, d: int):
    rows = np.asarray(rows).tolist()
    out = []
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            t = hamming(rows[i], rows[j])
            if t <= d:
                out.append((t, i, j))
    return sorted(out)


def closest_pair_naive(rows):
    return pairs_within_naive(rows, len(rows[0]))[0]


def histograms_naive(rows, k: int):
    rows = np.asarray(rows).tolist()
    n = len(rows[0])
    return [tuple(sum(1 for r in rows if r[j] == s) for s in range(1, k + 1)) for j in range(n)]
