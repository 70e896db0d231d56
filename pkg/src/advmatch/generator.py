"""Synthetic unlabeled databases and their shuffled, column-deleted counterparts.

Random streams
--------------
Every random draw comes from a PCG64 generator seeded by::

    SeedSequence(entropy=master_seed, spawn_key=(stream_index, purpose, *extra))

``stream_index`` is the trial index, ``purpose`` one of the ``PURPOSE_*``
integers below and ``extra`` an optional sub-index (the row-chunk number for
database generation). numpy guarantees ``SeedSequence`` output is stable across
releases, so a given ``(master_seed, trial)`` reproduces bit-identical data.

Databases are drawn in blocks of ``CHUNK_ROWS`` rows, each from its own chunk
stream. That makes any block regenerable on its own, which the streaming
vulnerability scan relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import (
    AlphabetDistribution,
    DeletionPattern,
    LabeledDatabase,
    LabelingPermutation,
    UnlabeledDatabase,
    symbol_dtype,
)
from .errors import CapacityError, UsageError

PURPOSE_DATABASE = 0
PURPOSE_PERMUTATION = 1
PURPOSE_PATTERN = 2
PURPOSE_VULNERABILITY = 3
PURPOSE_PAIR_SAMPLE = 4
PURPOSE_HISTOGRAM = 5

CHUNK_ROWS = 1 << 16
MEMORY_CAP = 1 << 31
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= value <= _U64:
                raise UsageError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def rng(self, purpose: int, *extra: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index, purpose, *extra)
        )
        return np.random.Generator(np.random.PCG64(seq))


def rows_for_rate(n: int, rate: float) -> int:
    """``m = ceil(2^(n R))``; the exponent is rounded to 1e-9 so that exactly
    integral ``n R`` does not pick up a spurious extra row."""
    if rate < 0:
        raise UsageError("rate must be nonnegative")
    exponent = round(n * rate, 9)
    if exponent == int(exponent):
        return 1 << int(exponent)
    return math.ceil(2.0**exponent)


def effective_rate(m: int, n: int) -> float:
    return math.log2(m) / n


def _check_cap(m: int, n: int, cap: int) -> None:
    if m * n > cap:
        raise CapacityError(f"database of {m} x {n} = {m * n} entries exceeds the cap of {cap}")


def _draw_chunk(rng: np.random.Generator, rows: int, n: int, dist: AlphabetDistribution):
    dtype = symbol_dtype(dist.size)
    if dist.is_uniform:
        return rng.integers(1, dist.size + 1, size=(rows, n), dtype=dtype)
    cdf = np.cumsum(dist.as_array())
    cdf[-1] = 1.0
    u = rng.random((rows, n))
    return (np.searchsorted(cdf, u, side="right") + 1).astype(dtype)


def chunk_count(m: int) -> int:
    return -(-m // CHUNK_ROWS)


def database_chunk(m: int, n: int, dist: AlphabetDistribution, seed: SeedSpec, chunk: int):
    """Rows ``chunk * CHUNK_ROWS`` onward (at most ``CHUNK_ROWS`` of them)."""
    start = chunk * CHUNK_ROWS
    if not 0 <= start < m:
        raise UsageError(f"chunk {chunk} out of range for {m} rows")
    rows = min(CHUNK_ROWS, m - start)
    return _draw_chunk(seed.rng(PURPOSE_DATABASE, chunk), rows, n, dist)


def iter_database_chunks(
    m: int, n: int, dist: AlphabetDistribution, seed: SeedSpec
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(row_offset, block)`` pairs that concatenate to ``sample_database``."""
    for c in range(chunk_count(m)):
        yield c * CHUNK_ROWS, database_chunk(m, n, dist, seed, c)


def sample_database(
    m: int, n: int, dist: AlphabetDistribution, seed: SeedSpec, cap: int = MEMORY_CAP
) -> UnlabeledDatabase:
    """``m x n`` matrix of i.i.d. entries drawn from ``dist``."""
    if m < 1 or n < 1:
        raise UsageError(f"need m, n >= 1, got m={m}, n={n}")
    _check_cap(m, n, cap)
    out = np.empty((m, n), dtype=symbol_dtype(dist.size))
    for offset, block in iter_database_chunks(m, n, dist, seed):
        out[offset : offset + block.shape[0]] = block
    return UnlabeledDatabase(out, dist.size)


def sample_permutation(m: int, seed: SeedSpec) -> LabelingPermutation:
    """Uniform row shuffle (Fisher-Yates via ``Generator.permutation``)."""
    if m < 1:
        raise UsageError("m must be positive")
    return LabelingPermutation(seed.rng(PURPOSE_PERMUTATION).permutation(m))


def make_labeled(
    db: UnlabeledDatabase, perm: LabelingPermutation, pattern: DeletionPattern
) -> LabeledDatabase:
    """Delete ``pattern``'s columns and move row ``i`` to position ``perm.forward[i]``."""
    if perm.size != db.rows:
        raise UsageError(f"permutation over {perm.size} rows, database has {db.rows}")
    if pattern.n != db.cols:
        raise UsageError(f"pattern over {pattern.n} columns, database has {db.cols}")
    kept = db.entries[:, pattern.retained()]
    return LabeledDatabase(kept[perm.inverse], db.alphabet_size)
