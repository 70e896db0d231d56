"""Monte Carlo harness: per-trial simulation, parameter sweeps, the
pattern-free vulnerability measure, histogram-uniqueness studies and capacity
tables.

A row is *vulnerable* at budget ``d`` when some other row lies within Hamming
distance ``d`` of it; exactly those rows can be forced into a collision by some
deletion pattern. The vulnerable fraction therefore measures worst-case error
without enumerating patterns.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .adversary import AdversaryStrategy
from .core import (
    AlphabetDistribution,
    DeletionPattern,
    LabeledDatabase,
    LabelingPermutation,
    UnlabeledDatabase,
    deletion_count,
    symbol_dtype,
)
from .detection import check_uniqueness, column_histograms
from .errors import AdvMatchError, CapacityError, UsageError
from .generator import (
    CHUNK_ROWS,
    MEMORY_CAP,
    PURPOSE_HISTOGRAM,
    PURPOSE_VULNERABILITY,
    SeedSpec,
    _draw_chunk,
    database_chunk,
    effective_rate,
    iter_database_chunks,
    make_labeled,
    rows_for_rate,
    sample_database,
    sample_permutation,
)
from .matching import match_pipeline, score
from .neighbors import SampleIndex, vulnerable_rows
from .probability import (
    CapacityPoint,
    adv_capacity,
    capacity_point,
    collision_param,
    histogram_uniqueness_bound,
    random_capacity,
    zero_capacity_budget,
)


# --------------------------------------------------------------------------
# Configuration and outcomes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialConfig:
    """One experimental cell. Give either ``rate`` (``m = ceil(2^(nR))``) or ``m``."""

    dist: AlphabetDistribution
    n: int
    delta: float
    rate: Optional[float] = None
    m: Optional[int] = None
    strategy: AdversaryStrategy = field(default_factory=AdversaryStrategy)
    trials: int = 1
    master_seed: int = 0
    row_sample: Optional[int] = None
    memory_cap: int = MEMORY_CAP

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("n must be positive")
        if (self.rate is None) == (self.m is None):
            raise UsageError("give exactly one of rate and m")
        if self.m is not None and self.m < 1:
            raise UsageError("m must be positive")
        if self.rate is not None and self.rate < 0:
            raise UsageError("rate must be nonnegative")
        if not 0.0 <= self.delta <= 1.0:
            raise UsageError("delta must lie in [0, 1]")
        if self.trials < 1:
            raise UsageError("trials must be positive")
        if self.row_sample is not None and self.row_sample < 1:
            raise UsageError("row_sample must be positive")
        SeedSpec(self.master_seed)

    @property
    def rows(self) -> int:
        return self.m if self.m is not None else rows_for_rate(self.n, self.rate)

    @property
    def d(self) -> int:
        return deletion_count(self.n, self.delta)

    @property
    def rate_eff(self) -> float:
        return effective_rate(self.rows, self.n)

    @property
    def delta_eff(self) -> float:
        return self.d / self.n

    def check_memory(self) -> None:
        m = self.rows
        if m * self.n > self.memory_cap:
            raise CapacityError(
                f"m = ceil(2^(nR)) = {m} rows x {self.n} columns exceeds the memory cap "
                f"of {self.memory_cap} entries"
            )


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one trial. Pipeline fields are ``None`` for vulnerability-only runs."""

    trial: int
    vulnerable_fraction: float
    error_fraction: Optional[float] = None
    detection_error: Optional[bool] = None
    collided_rows: Optional[int] = None
    wall_time: float = field(default=0.0, compare=False)


# --------------------------------------------------------------------------
# Vulnerability
# --------------------------------------------------------------------------

def _check_radius(n: int, d: int) -> None:
    if not 0 <= d <= n:
        raise UsageError(f"need 0 <= d <= n, got d={d}, n={n}")


def _sample_rows(m: int, row_sample: int, seed: SeedSpec) -> np.ndarray:
    picked = seed.rng(PURPOSE_VULNERABILITY).choice(m, size=row_sample, replace=False)
    return np.sort(picked)


def vulnerable_fraction(
    db: UnlabeledDatabase,
    d: int,
    row_sample: Optional[int] = None,
    seed: Optional[SeedSpec] = None,
) -> float:
    """Fraction of rows having another row within Hamming distance ``d``.

    Exact over all rows by default. With ``row_sample`` the fraction is taken
    over that many rows drawn uniformly without replacement (an unbiased
    estimate), each still compared against every other row.
    """
    m, n = db.shape
    _check_radius(n, d)
    if m < 2:
        return 0.0
    if row_sample is None or row_sample >= m:
        return float(vulnerable_rows(db.entries, d).mean())
    if seed is None:
        raise UsageError("sampled vulnerability needs a seed")
    idx = _sample_rows(m, row_sample, seed)
    index = SampleIndex(db.entries[idx], idx, d, db.alphabet_size)
    for start in range(0, m, CHUNK_ROWS):
        index.scan(db.entries[start : start + CHUNK_ROWS], start)
    return float(index.found.mean())


def streamed_vulnerable_fraction(
    m: int,
    n: int,
    dist: AlphabetDistribution,
    d: int,
    row_sample: int,
    seed: SeedSpec,
) -> float:
    """Sampled :func:`vulnerable_fraction` of ``sample_database(m, n, dist, seed)``
    without materialising the database; chunks are regenerated on demand."""
    _check_radius(n, d)
    if m < 2:
        return 0.0
    if row_sample >= m:
        return vulnerable_fraction(sample_database(m, n, dist, seed), d)
    idx = _sample_rows(m, row_sample, seed)
    samples = np.empty((idx.size, n), dtype=symbol_dtype(dist.size))
    chunk_of = idx // CHUNK_ROWS
    for c in np.unique(chunk_of):
        block = database_chunk(m, n, dist, seed, int(c))
        sel = chunk_of == c
        samples[sel] = block[idx[sel] - c * CHUNK_ROWS]
    index = SampleIndex(samples, idx, d, dist.size)
    for offset, block in iter_database_chunks(m, n, dist, seed):
        index.scan(block, offset)
    return float(index.found.mean())


# --------------------------------------------------------------------------
# Trials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialInstance:
    """Everything one trial generates before matching."""

    db: UnlabeledDatabase
    perm: LabelingPermutation
    pattern: DeletionPattern
    labeled: LabeledDatabase


def build_instance(cfg: TrialConfig, trial_index: int) -> TrialInstance:
    cfg.check_memory()
    seed = SeedSpec(cfg.master_seed, trial_index)
    db = sample_database(cfg.rows, cfg.n, cfg.dist, seed, cfg.memory_cap)
    perm = sample_permutation(db.rows, seed)
    pattern = cfg.strategy.choose(db, cfg.d, seed)
    return TrialInstance(db, perm, pattern, make_labeled(db, perm, pattern))


def run_trial(cfg: TrialConfig, trial_index: int) -> TrialOutcome:
    """Generate, attack, match and score one database."""
    start = time.perf_counter()
    inst = build_instance(cfg, trial_index)
    est = match_pipeline(inst.db, inst.labeled)
    seed = SeedSpec(cfg.master_seed, trial_index)
    return TrialOutcome(
        trial=trial_index,
        vulnerable_fraction=vulnerable_fraction(inst.db, cfg.d, cfg.row_sample, seed),
        error_fraction=score(est, inst.perm),
        detection_error=est.detection_error,
        collided_rows=est.collided_rows,
        wall_time=time.perf_counter() - start,
    )


def run_vulnerability_trial(cfg: TrialConfig, trial_index: int) -> TrialOutcome:
    """Vulnerable fraction only. Sampled runs stream the database, so ``m`` may
    exceed the memory cap; exact runs need it in memory."""
    start = time.perf_counter()
    seed = SeedSpec(cfg.master_seed, trial_index)
    m = cfg.rows
    if cfg.row_sample is not None and cfg.row_sample < m:
        frac = streamed_vulnerable_fraction(m, cfg.n, cfg.dist, cfg.d, cfg.row_sample, seed)
    else:
        cfg.check_memory()
        frac = vulnerable_fraction(sample_database(m, cfg.n, cfg.dist, seed, cfg.memory_cap), cfg.d)
    return TrialOutcome(trial_index, frac, wall_time=time.perf_counter() - start)


def _run(args):
    cfg, trial, pipeline = args
    try:
        return (run_trial if pipeline else run_vulnerability_trial)(cfg, trial)
    except AdvMatchError as exc:
        return exc


def run_trials(
    cfg: TrialConfig, pipeline: bool = True, workers: int = 1
) -> list[TrialOutcome]:
    """All ``cfg.trials`` trials in trial order; the first error is raised."""
    results = _map(_run, [(cfg, t, pipeline) for t in range(cfg.trials)], workers)
    for r in results:
        if isinstance(r, Exception):
            raise r
    return results


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    n: int
    m: int
    rate_eff: float
    delta_eff: float
    strategy: str
    trials: int
    err_mean: float
    err_stderr: float
    vuln_mean: float
    vuln_stderr: float
    det_err_rate: float
    C_adv: float
    C_random: float
    margin: float
    error: Optional[str] = None


def mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error; the error is NaN for fewer than two values."""
    k = len(values)
    if k == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / k
    if k < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var / k)


def strategy_label(strategy: AdversaryStrategy) -> str:
    return strategy.kind + ("(heuristic)" if strategy.heuristic else "")


def aggregate(cfg: TrialConfig, outcomes: Sequence[TrialOutcome]) -> SweepRow:
    """Fold trial outcomes into one row. Outcomes are ordered by trial first,
    so the result does not depend on completion order."""
    outcomes = sorted(outcomes, key=lambda o: o.trial)
    vuln_mean, vuln_err = mean_stderr([o.vulnerable_fraction for o in outcomes])
    errs = [o.error_fraction for o in outcomes if o.error_fraction is not None]
    err_mean, err_err = mean_stderr(errs) if errs else (math.nan, math.nan)
    dets = [o.detection_error for o in outcomes if o.detection_error is not None]
    det_rate = sum(bool(x) for x in dets) / len(dets) if dets else math.nan
    c_adv = adv_capacity(cfg.dist, cfg.delta_eff)
    return SweepRow(
        n=cfg.n,
        m=cfg.rows,
        rate_eff=cfg.rate_eff,
        delta_eff=cfg.delta_eff,
        strategy=strategy_label(cfg.strategy),
        trials=len(outcomes),
        err_mean=err_mean,
        err_stderr=err_err,
        vuln_mean=vuln_mean,
        vuln_stderr=vuln_err,
        det_err_rate=det_rate,
        C_adv=c_adv,
        C_random=random_capacity(cfg.dist, cfg.delta_eff),
        margin=cfg.rate_eff - c_adv,
    )


def _failed_row(cfg: TrialConfig, message: str) -> SweepRow:
    nan = math.nan
    try:
        m, rate = cfg.rows, cfg.rate_eff
    except (AdvMatchError, OverflowError):
        m, rate = 0, nan
    c_adv = adv_capacity(cfg.dist, cfg.delta_eff)
    return SweepRow(
        cfg.n, m, rate, cfg.delta_eff, strategy_label(cfg.strategy), 0,
        nan, nan, nan, nan, nan, c_adv, random_capacity(cfg.dist, cfg.delta_eff),
        rate - c_adv, error=message,
    )


def sweep(
    grid: Iterable[TrialConfig], pipeline: bool = True, workers: int = 1
) -> list[SweepRow]:
    """Run every cell; a failing trial marks its cell as failed without
    stopping the others."""
    grid = list(grid)
    tasks = [(cfg, t, pipeline) for cfg in grid for t in range(cfg.trials)]
    results = _map(_run, tasks, workers)
    rows, pos = [], 0
    for cfg in grid:
        cell = results[pos : pos + cfg.trials]
        pos += cfg.trials
        failure = next((r for r in cell if isinstance(r, Exception)), None)
        if failure is not None:
            rows.append(_failed_row(cfg, f"{type(failure).__name__}: {failure}"))
        else:
            rows.append(aggregate(cfg, cell))
    return rows


# --------------------------------------------------------------------------
# Histogram uniqueness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramStudyRow:
    n: int
    m: int
    alphabet: int
    trials: int
    dup_prob_emp: float
    dup_prob_stderr: float
    bound_exact: Optional[float]
    scaling_ref: float
    note: Optional[str] = None


def has_duplicate_histograms(entries: np.ndarray, alphabet_size: int) -> bool:
    db = LabeledDatabase(entries, alphabet_size)
    return check_uniqueness(column_histograms(db)) is not None


def histogram_uniqueness_study(
    n: int,
    ms: Sequence[int],
    dist: AlphabetDistribution,
    trials: int,
    master_seed: int,
) -> list[HistogramStudyRow]:
    """Empirical probability that some two of ``n`` columns share a histogram,
    next to the union bound (blank when its enumeration is infeasible) and the
    reference growth ``m^((k-1)/4)`` to compare against ``n``."""
    if n < 1 or trials < 1:
        raise UsageError("n and trials must be positive")
    out = []
    for m in ms:
        if m < 1:
            raise UsageError("every m must be positive")
        hits = []
        for t in range(trials):
            rng = SeedSpec(master_seed, t).rng(PURPOSE_HISTOGRAM, m)
            hits.append(float(has_duplicate_histograms(_draw_chunk(rng, m, n, dist), dist.size)))
        mean, err = mean_stderr(hits)
        try:
            bound, note = histogram_uniqueness_bound(n, m, dist), None
        except CapacityError as exc:
            bound, note = None, str(exc)
        out.append(
            HistogramStudyRow(n, m, dist.size, trials, mean, err, bound,
                              m ** ((dist.size - 1) / 4), note)
        )
    return out


# --------------------------------------------------------------------------
# Capacity tables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CapacityCurve:
    points: tuple[CapacityPoint, ...]
    qhat: float
    threshold: float

    def zero_region(self) -> list[CapacityPoint]:
        """Points at or beyond the budget where the adversarial capacity vanishes."""
        return [p for p in self.points if p.delta >= self.threshold]


def capacity_curve(dist: AlphabetDistribution, deltas: Iterable[float]) -> CapacityCurve:
    points = tuple(capacity_point(dist, float(x)) for x in deltas)
    return CapacityCurve(points, collision_param(dist), zero_capacity_budget(dist))
