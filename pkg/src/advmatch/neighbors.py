"""Hamming-radius neighbour search over symbol matrices.

Two rows within Hamming distance ``r`` of each other agree exactly on at least
one of any ``r + 1`` disjoint column blocks (pigeonhole). Each search therefore
buckets rows by a hash of one block at a time and verifies only rows sharing a
bucket. Hash collisions merely add candidates; verification is exact, so the
results are exact too.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import List

BRUTE_FORCE_ROWS = 4096
DIRECT_TABLE_LIMIT = 1 << 20


def block_bounds(n: int, parts: int) -> np.ndarray:
    """``parts`` contiguous, near-equal column ranges covering ``0..n``."""
    edges = np.linspace(0, n, parts + 1).round().astype(np.int64)
    return np.column_stack([edges[:-1], edges[1:]])


@njit(cache=True, inline="always")
def _hash_block(row, lo, hi):
    h = np.uint64(0xCBF29CE484222325)
    for c in range(lo, hi):
        h = (h ^ np.uint64(row[c])) * np.uint64(0x100000001B3)
    return h


@njit(cache=True)
def _block_keys(rows, lo, hi):
    m = rows.shape[0]
    out = np.empty(m, dtype=np.uint64)
    for i in range(m):
        out[i] = _hash_block(rows[i], lo, hi)
    return out


@njit(cache=True, inline="always")
def _within(a, b, radius):
    miss = 0
    for c in range(a.shape[0]):
        if a[c] != b[c]:
            miss += 1
            if miss > radius:
                return -1
    return miss


@njit(cache=True)
def _first_agreeing_block(a, b, bounds):
    for k in range(bounds.shape[0]):
        same = True
        for c in range(bounds[k, 0], bounds[k, 1]):
            if a[c] != b[c]:
                same = False
                break
        if same:
            return k
    return -1


@njit(cache=True)
def _mark_bucketed(rows, order, keys, radius, mark):
    m = order.shape[0]
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and keys[order[stop]] == keys[order[start]]:
            stop += 1
        for a in range(start, stop):
            i = order[a]
            for b in range(a + 1, stop):
                j = order[b]
                if mark[i] and mark[j]:
                    continue
                if _within(rows[i], rows[j], radius) >= 0:
                    mark[i] = True
                    mark[j] = True
        start = stop


@njit(cache=True)
def _collect_bucketed(rows, order, keys, radius, block, bounds, out_i, out_j, out_d):
    m = order.shape[0]
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and keys[order[stop]] == keys[order[start]]:
            stop += 1
        for a in range(start, stop):
            for b in range(a + 1, stop):
                i = min(order[a], order[b])
                j = max(order[a], order[b])
                dist = _within(rows[i], rows[j], radius)
                # report each pair once: from the first block it agrees on
                if dist >= 0 and _first_agreeing_block(rows[i], rows[j], bounds) == block:
                    out_i.append(i)
                    out_j.append(j)
                    out_d.append(dist)
        start = stop


@njit(cache=True)
def _all_pairs(rows, radius, out_i, out_j, out_d):
    m = rows.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            dist = _within(rows[i], rows[j], radius)
            if dist >= 0:
                out_i.append(i)
                out_j.append(j)
                out_d.append(dist)


@njit(cache=True)
def _closest_pair_brute(rows):
    m, n = rows.shape
    best, bi, bj = n + 1, -1, -1
    for i in range(m):
        for j in range(i + 1, m):
            miss = 0
            for c in range(n):
                if rows[i, c] != rows[j, c]:
                    miss += 1
                    if miss >= best:
                        break
            if miss < best:
                best, bi, bj = miss, i, j
                if best == 0:
                    return bi, bj, 0
    return bi, bj, best


@njit(cache=True)
def _scan_hashed(chunk, offset, samples, sample_idx, bounds, skeys, sorder, radius, found):
    s = samples.shape[0]
    for r in range(chunk.shape[0]):
        g = offset + r
        row = chunk[r]
        for b in range(bounds.shape[0]):
            key = _hash_block(row, bounds[b, 0], bounds[b, 1])
            pos = np.searchsorted(skeys[b], key)
            while pos < s and skeys[b, pos] == key:
                t = sorder[b, pos]
                pos += 1
                if found[t] or sample_idx[t] == g:
                    continue
                if _within(row, samples[t], radius) >= 0:
                    found[t] = True


@njit(cache=True)
def _scan_direct(chunk, offset, samples, sample_idx, block_of, weight, occupied, starts, members, radius, found):
    # look up each chunk row's block codes in the sample table and verify the
    # sampled rows filed under the same code
    m, n = chunk.shape
    codes = np.zeros(starts.shape[0], dtype=np.int64)
    one = np.uint64(1)
    for r in range(m):
        g = offset + r
        codes[:] = 0
        for c in range(n):
            codes[block_of[c]] += (np.int64(chunk[r, c]) - 1) * weight[c]
        for b in range(codes.shape[0]):
            code = codes[b]
            if not (occupied[b, code >> 6] >> np.uint64(code & 63)) & one:
                continue
            for q in range(starts[b, code], starts[b, code + 1]):
                t = members[b, q]
                if found[t] or sample_idx[t] == g:
                    continue
                # branchless count beats early exit on random rows
                miss = 0
                for c in range(n):
                    miss += chunk[r, c] != samples[t, c]
                if miss <= radius:
                    found[t] = True


def _block_codes(rows, lo, hi, base):
    codes = np.zeros(rows.shape[0], dtype=np.int64)
    for c in range(lo, hi):
        codes = codes * base + (rows[:, c].astype(np.int64) - 1)
    return codes


def _substitution_codes(rows, lo, hi, base):
    """Codes of every block variant within one substitution, with owner rows."""
    codes = _block_codes(rows, lo, hi, base)
    owners = np.arange(rows.shape[0])
    out_codes, out_owners = [codes], [owners]
    for c in range(lo, hi):
        place = base ** (hi - 1 - c)
        digit = rows[:, c].astype(np.int64) - 1
        for shift in range(1, base):
            out_codes.append(codes + ((digit + shift) % base - digit) * place)
            out_owners.append(owners)
    return np.concatenate(out_codes), np.concatenate(out_owners)


def _as_rows(entries) -> np.ndarray:
    return np.ascontiguousarray(entries)


def _empty_lists():
    return tuple(List.empty_list(types.int64) for _ in range(3))


def pairs_within(entries, radius: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All row pairs ``i < j`` at Hamming distance ``<= radius``.

    Returns ``(i, j, dist)`` arrays sorted by ``(dist, i, j)``.
    """
    rows = _as_rows(entries)
    m, n = rows.shape
    out_i, out_j, out_d = _empty_lists()
    if m >= 2 and radius >= 0:
        if radius >= n:
            _all_pairs(rows, radius, out_i, out_j, out_d)
        else:
            bounds = block_bounds(n, radius + 1)
            for b, (lo, hi) in enumerate(bounds):
                keys = _block_keys(rows, lo, hi)
                order = np.argsort(keys, kind="stable")
                _collect_bucketed(rows, order, keys, radius, b, bounds, out_i, out_j, out_d)
    i = np.asarray(out_i, dtype=np.int64)
    j = np.asarray(out_j, dtype=np.int64)
    d = np.asarray(out_d, dtype=np.int64)
    idx = np.lexsort((j, i, d))
    return i[idx], j[idx], d[idx]


def vulnerable_rows(entries, radius: int) -> np.ndarray:
    """Mask of rows having some *other* row within Hamming distance ``radius``."""
    rows = _as_rows(entries)
    m, n = rows.shape
    mark = np.zeros(m, dtype=np.bool_)
    if m < 2 or radius < 0:
        return mark
    if radius >= n:
        mark[:] = True
        return mark
    for lo, hi in block_bounds(n, radius + 1):
        keys = _block_keys(rows, lo, hi)
        order = np.argsort(keys, kind="stable")
        _mark_bucketed(rows, order, keys, radius, mark)
    return mark


def closest_pair(entries) -> tuple[int, int, int]:
    """Pair ``(i, j, dist)`` with minimal Hamming distance; ties go to the
    lexicographically smallest ``(i, j)``."""
    rows = _as_rows(entries)
    m, n = rows.shape
    if m < 2:
        raise ValueError("need at least two rows")
    if m <= BRUTE_FORCE_ROWS:
        i, j, d = _closest_pair_brute(rows)
        return int(i), int(j), int(d)
    for radius in range(n + 1):
        i, j, d = pairs_within(rows, radius)
        if i.size:
            return int(i[0]), int(j[0]), int(d[0])
    raise AssertionError("unreachable: every pair lies within distance n")


class SampleIndex:
    """Index over a few sampled rows, scanned against database chunks.

    After all chunks have been scanned, ``found[t]`` tells whether sampled row
    ``t`` has another row within the radius. Blocks are addressed directly by
    their base-``k`` code when the table stays small, else by hash lookup.
    When it fits, the direct table uses ``radius // 2 + 1`` wider blocks and
    files each sample under every code within one substitution: a row within
    the radius then misses some block by at most one symbol, which yields far
    fewer candidates than exact agreement on ``radius + 1`` narrow blocks.
    """

    def __init__(self, samples, sample_idx, radius: int, alphabet_size: int):
        self.samples = _as_rows(samples)
        self.sample_idx = np.asarray(sample_idx, dtype=np.int64)
        self.radius = radius
        s, n = self.samples.shape
        self.found = np.zeros(s, dtype=np.bool_)
        self.trivial = radius >= n
        if self.trivial:
            return
        k = alphabet_size
        self.direct = False
        for slack in (1, 0) if radius else (0,):
            bounds = block_bounds(n, radius // (slack + 1) + 1)
            widest = int((bounds[:, 1] - bounds[:, 0]).max())
            variants = 1 + slack * widest * (k - 1)
            if k**widest <= DIRECT_TABLE_LIMIT and len(bounds) * s * variants <= DIRECT_TABLE_LIMIT:
                self.direct, self.slack, self.bounds = True, slack, bounds
                break
        if self.direct:
            self._build_direct(k, k**widest)
        else:
            self.bounds = block_bounds(n, radius + 1)
            keys = np.stack([_block_keys(self.samples, lo, hi) for lo, hi in self.bounds])
            self.order = np.argsort(keys, axis=1, kind="stable")
            self.keys = np.ascontiguousarray(np.take_along_axis(keys, self.order, axis=1))

    def _build_direct(self, k: int, size: int) -> None:
        n = self.samples.shape[1]
        blocks = len(self.bounds)
        self.block_of = np.empty(n, dtype=np.int64)
        self.weight = np.empty(n, dtype=np.int64)
        filed = []
        for b, (lo, hi) in enumerate(self.bounds):
            self.block_of[lo:hi] = b
            self.weight[lo:hi] = k ** np.arange(hi - lo - 1, -1, -1)
            if self.slack:
                filed.append(_substitution_codes(self.samples, lo, hi, k))
            else:
                filed.append((_block_codes(self.samples, lo, hi, k), np.arange(self.samples.shape[0])))
        self.starts = np.zeros((blocks, size + 1), dtype=np.int64)
        self.members = np.zeros((blocks, max(codes.size for codes, _ in filed)), dtype=np.int64)
        for b, (codes, owners) in enumerate(filed):
            order = np.argsort(codes, kind="stable")
            self.members[b, : codes.size] = owners[order]
            self.starts[b, 1:] = np.cumsum(np.bincount(codes, minlength=size))
        nonempty = np.diff(self.starts, axis=1) > 0
        nonempty = np.pad(nonempty, ((0, 0), (0, -size % 64)))
        self.occupied = np.ascontiguousarray(np.packbits(nonempty, axis=1, bitorder="little")).view(np.uint64)

    def scan(self, chunk, offset: int) -> None:
        chunk = _as_rows(chunk)
        if self.trivial:
            # every other row qualifies
            if chunk.shape[0] > 1:
                self.found[:] = True
            else:
                self.found |= self.sample_idx != offset
            return
        if self.direct:
            _scan_direct(
                chunk, offset, self.samples, self.sample_idx, self.block_of, self.weight,
                self.occupied, self.starts, self.members, self.radius, self.found,
            )
        else:
            _scan_hashed(
                chunk, offset, self.samples, self.sample_idx, self.bounds,
                self.keys, self.order, self.radius, self.found,
            )
