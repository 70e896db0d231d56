"""Domain types and the Hamming-distance kernel.

Conventions used throughout the package:

* symbols are 1-based integers ``1..k`` (``k`` = alphabet size), stored as the
  smallest unsigned numpy dtype that holds ``k``;
* row and column *indices* are 0-based, as everywhere else in numpy.
  ``DeletionPattern.from_one_based`` / ``.one_based()`` convert to the 1-based
  column numbering used in saved truth files and reports;
* every type is immutable after construction (arrays are made read-only), so
  instances can be shared between workers freely.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import UsageError

PROB_SUM_TOL = 1e-12
SPEC_SUM_TOL = 1e-9


def symbol_dtype(alphabet_size: int) -> np.dtype:
    """Smallest unsigned dtype able to hold symbols ``1..alphabet_size``."""
    if alphabet_size <= np.iinfo(np.uint8).max:
        return np.dtype(np.uint8)
    if alphabet_size <= np.iinfo(np.uint16).max:
        return np.dtype(np.uint16)
    return np.dtype(np.uint32)


def _frozen(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable or not arr.flags.c_contiguous:
        arr = np.array(arr, order="C", copy=True)
        arr.flags.writeable = False
    return arr


# --------------------------------------------------------------------------
# Alphabet law
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphabetDistribution:
    """Law of a single database entry over the symbols ``1..k``."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) < 2:
            raise UsageError("alphabet must contain at least two symbols")
        if any(not math.isfinite(p) or p <= 0.0 or p > 1.0 for p in probs):
            raise UsageError(f"probabilities must lie in (0, 1]: {probs}")
        if abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise UsageError(f"probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def uniform(cls, k: int) -> "AlphabetDistribution":
        if k < 2:
            raise UsageError("alphabet must contain at least two symbols")
        return cls((1.0 / k,) * k)

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "AlphabetDistribution":
        """Normalise nonnegative weights (e.g. empirical counts)."""
        total = math.fsum(weights)
        if total <= 0:
            raise UsageError("weights must have a positive sum")
        return cls(_renormalise([w / total for w in weights]))

    @classmethod
    def parse(cls, spec: str) -> "AlphabetDistribution":
        """Parse ``uniform:k`` or a comma-separated probability list.

        Lists must sum to one within 1e-9 and are then renormalised.
        """
        spec = spec.strip()
        if spec.startswith("uniform:"):
            try:
                k = int(spec.split(":", 1)[1])
            except ValueError:
                raise UsageError(f"bad alphabet size in {spec!r}") from None
            return cls.uniform(k)
        try:
            values = [float(tok) for tok in spec.split(",") if tok.strip()]
        except ValueError:
            raise UsageError(f"cannot parse distribution {spec!r}") from None
        if abs(math.fsum(values) - 1.0) > SPEC_SUM_TOL:
            raise UsageError(f"probabilities in {spec!r} do not sum to 1")
        return cls(_renormalise(values))

    @property
    def size(self) -> int:
        return len(self.probs)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.probs)) == 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    def exact_probs(self) -> tuple[Fraction, ...]:
        """Atoms as exact rationals: ``1/k`` for uniform laws, else the binary floats."""
        if self.is_uniform:
            return (Fraction(1, self.size),) * self.size
        return tuple(Fraction(p) for p in self.probs)

    def spec(self) -> str:
        """Inverse of :meth:`parse` (round-trips exactly)."""
        if self.is_uniform:
            return f"uniform:{self.size}"
        return ",".join(repr(p) for p in self.probs)


def _renormalise(values: Sequence[float]) -> tuple[float, ...]:
    total = math.fsum(values)
    probs = [v / total for v in values]
    # push the residual rounding error into the largest atom
    residual = 1.0 - math.fsum(probs)
    i = max(range(len(probs)), key=probs.__getitem__)
    probs[i] += residual
    return tuple(probs)


# --------------------------------------------------------------------------
# Databases
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _SymbolMatrix:
    entries: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise UsageError(f"expected a 2-D matrix, got shape {entries.shape}")
        if self.alphabet_size < 2:
            raise UsageError("alphabet must contain at least two symbols")
        if entries.size:
            lo, hi = int(entries.min()), int(entries.max())
            if lo < 1 or hi > self.alphabet_size:
                raise UsageError(
                    f"symbols must lie in 1..{self.alphabet_size}, found {lo}..{hi}"
                )
        entries = entries.astype(symbol_dtype(self.alphabet_size), copy=False)
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.alphabet_size == other.alphabet_size
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None


class UnlabeledDatabase(_SymbolMatrix):
    """The public database: ``m`` rows (users) by ``n`` columns, known row order."""

    def __post_init__(self):
        super().__post_init__()
        if self.rows < 1 or self.cols < 1:
            raise UsageError("an unlabeled database needs at least one row and column")


class LabeledDatabase(_SymbolMatrix):
    """The anonymized database: shuffled rows, deleted columns removed.

    Deleted columns are dropped rather than kept as blanks, so the matcher
    never sees where deletions happened.
    """

    def __post_init__(self):
        super().__post_init__()
        if self.rows < 1:
            raise UsageError("a labeled database needs at least one row")


# --------------------------------------------------------------------------
# Deletion pattern and labeling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DeletionPattern:
    """Set of deleted column indices (0-based, strictly increasing) out of ``n``."""

    indices: tuple[int, ...]
    n: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        object.__setattr__(self, "indices", idx)
        if self.n < 0:
            raise UsageError("column count must be nonnegative")
        if len(set(idx)) != len(idx):
            raise UsageError(f"duplicate deletion indices: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.n):
            raise UsageError(f"deletion indices out of range 0..{self.n - 1}: {idx}")

    @classmethod
    def from_one_based(cls, indices: Iterable[int], n: int) -> "DeletionPattern":
        return cls(tuple(int(i) - 1 for i in indices), n)

    @classmethod
    def empty(cls, n: int) -> "DeletionPattern":
        return cls((), n)

    def one_based(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in self.indices)

    @property
    def d(self) -> int:
        return len(self.indices)

    @property
    def budget(self) -> float:
        """Effective deletion budget ``d / n``."""
        return self.d / self.n if self.n else 0.0

    def retained(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.indices)] = False
        return np.flatnonzero(mask)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, j):
        return j in self.indices


def deletion_count(n: int, delta: float) -> int:
    """``d = floor(n * delta)``, robust to binary rounding of ``n * delta``."""
    if not 0.0 <= delta <= 1.0:
        raise UsageError(f"deletion budget must lie in [0, 1], got {delta}")
    return min(n, int(math.floor(round(n * delta, 9))))


@dataclass(frozen=True, eq=False)
class LabelingPermutation:
    """Row shuffle: row ``i`` of the unlabeled database becomes row ``forward[i]``."""

    forward: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.int64)
        m = fwd.shape[0]
        if fwd.ndim != 1 or m < 1:
            raise UsageError("permutation must be a non-empty 1-D array")
        inv = np.full(m, -1, dtype=np.int64)
        if fwd.min() < 0 or fwd.max() >= m:
            raise UsageError("permutation entries out of range")
        inv[fwd] = np.arange(m, dtype=np.int64)
        if (inv < 0).any():
            raise UsageError("permutation is not a bijection")
        object.__setattr__(self, "forward", _frozen(fwd))
        object.__setattr__(self, "inverse", _frozen(inv))

    @classmethod
    def identity(cls, m: int) -> "LabelingPermutation":
        return cls(np.arange(m, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.forward.shape[0]

    def __eq__(self, other):
        return isinstance(other, LabelingPermutation) and np.array_equal(
            self.forward, other.forward
        )

    __hash__ = None


# --------------------------------------------------------------------------
# Match estimate
# --------------------------------------------------------------------------

COLLISION = -1
DETECTION = -2


@dataclass(frozen=True, eq=False)
class MatchEstimate:
    """Per-row outcome for the labeled database.

    ``assignment[l]`` is the matched unlabeled-row index, or ``COLLISION``
    (zero or several candidates), or ``DETECTION`` (histogram gate failed; then
    every row carries it).
    """

    assignment: np.ndarray
    unlabeled_rows: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise UsageError("assignment must be 1-D")
        if ((a < DETECTION) | (a >= self.unlabeled_rows)).any():
            raise UsageError("matched indices out of range")
        det = a == DETECTION
        if det.any() and not det.all():
            raise UsageError("detection error must flag every row")
        object.__setattr__(self, "assignment", _frozen(a))

    @classmethod
    def detection_failure(cls, rows: int, unlabeled_rows: int) -> "MatchEstimate":
        return cls(np.full(rows, DETECTION, dtype=np.int64), unlabeled_rows)

    @property
    def detection_error(self) -> bool:
        return bool(self.assignment.size) and self.assignment[0] == DETECTION

    @property
    def collided_rows(self) -> int:
        return int(np.count_nonzero(self.assignment == COLLISION))

    @property
    def matched(self) -> np.ndarray:
        return self.assignment >= 0

    def __eq__(self, other):
        return isinstance(other, MatchEstimate) and np.array_equal(
            self.assignment, other.assignment
        )

    __hash__ = None


# --------------------------------------------------------------------------
# Row kernels
# --------------------------------------------------------------------------

def hamming_distance(a, b) -> int:
    """Number of positions where two equal-length symbol rows differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError(f"rows must be 1-D and equally long: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def apply_pattern_complement(row, pattern: DeletionPattern) -> np.ndarray:
    """Entries of ``row`` at the retained columns, in their original order."""
    row = np.asarray(row)
    if row.ndim != 1 or row.shape[0] != pattern.n:
        raise UsageError(f"row length {row.shape} does not match pattern n={pattern.n}")
    return row[pattern.retained()]


# --------------------------------------------------------------------------
# Text format: "m n k" header, then m lines of n space-separated symbols
# --------------------------------------------------------------------------

def write_database(db: _SymbolMatrix, dest) -> None:
    """Write ``db`` in the plain-text database format to a path or text stream."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="\n") as fh:
            write_database(db, fh)
        return
    m, n = db.shape
    dest.write(f"{m} {n} {db.alphabet_size}\n")
    for row in db.entries:
        dest.write(" ".join(map(str, row.tolist())) + "\n")


def read_database(src, labeled: bool = False) -> _SymbolMatrix:
    if isinstance(src, (str, os.PathLike)):
        with open(src) as fh:
            return read_database(fh, labeled=labeled)
    header = src.readline().split()
    if len(header) != 3:
        raise UsageError("database header must be 'm n k'")
    try:
        m, n, k = (int(tok) for tok in header)
    except ValueError:
        raise UsageError("database header must hold three integers") from None
    body = src.read()
    values = np.array(body.split(), dtype=np.int64) if body.strip() else np.zeros(0, np.int64)
    if values.size != m * n:
        raise UsageError(f"expected {m * n} symbols, found {values.size}")
    cls = LabeledDatabase if labeled else UnlabeledDatabase
    return cls(values.reshape(m, n), k)


def database_to_text(db: _SymbolMatrix) -> str:
    buf = io.StringIO()
    write_database(db, buf)
    return buf.getvalue()
