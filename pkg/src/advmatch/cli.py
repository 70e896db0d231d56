"""Command-line front end.

Every subcommand reads an optional flat ``key = value`` config file
(``--config``); any key can also be given as the same-named flag
(``row_sample`` -> ``--row-sample``) and flags win. All values are validated
before any computation starts.

Exit codes: 0 success, 2 invalid configuration or input, 3 resource guard hit.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .adversary import EXHAUSTIVE_BUDGET, STRATEGIES, AdversaryStrategy
from .core import AlphabetDistribution, write_database
from .errors import AdvMatchError, CapacityError, ConfigError, UsageError
from .experiments import (
    TrialConfig,
    build_instance,
    capacity_curve,
    histogram_uniqueness_study,
    run_trials,
    sweep,
)
from .generator import MEMORY_CAP, effective_rate
from .probability import adv_capacity, collision_param, random_capacity, zero_capacity_budget

WORKERS_ENV = "ADVMATCH_WORKERS"
GRID_TOL = 1e-12
MAX_DISTINCT = 10**4
POOLING_CAVEAT = (
    "Caveat: pooling several columns into one i.i.d. law ignores dependence "
    "between columns, which the i.i.d. database model assumes away."
)

CAPACITY_HEADER = ["delta", "adv_capacity_bits", "random_capacity_bits", "qhat", "threshold"]
SIMULATE_HEADER = [
    "n", "m", "rate_eff", "delta_eff", "strategy", "trial", "error_fraction",
    "detection_error", "collided_rows", "vulnerable_fraction", "seed",
]
VULNERABILITY_HEADER = ["n", "m", "rate_eff", "delta_eff", "trial", "vulnerable_fraction", "seed"]
SWEEP_HEADER = [
    "n", "m", "rate_eff", "delta_eff", "strategy", "trials", "err_mean", "err_stderr",
    "vuln_mean", "vuln_stderr", "det_err_rate", "C_adv", "C_random", "margin",
]
HISTOGRAM_HEADER = [
    "n", "m", "alphabet", "trials", "dup_prob_emp", "dup_prob_stderr", "bound_exact", "scaling_ref",
]
INGEST_HEADER = ["delta", "adv_capacity_bits", "random_capacity_bits", "margin"]


# --------------------------------------------------------------------------
# Value parsers
# --------------------------------------------------------------------------

def _number(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text}")
    return value


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` (both ends inclusive), a comma list, or one number."""
    spec = spec.strip()
    if ":" not in spec:
        return [_number(x) for x in spec.split(",") if x.strip()]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must read start:stop:step")
    start, stop, step = (_number(p) for p in parts)
    if stop == start:
        return [start]
    if step <= 0 or stop < start:
        raise ValueError("grid needs start <= stop and a positive step")
    count = math.floor((stop - start) / step + GRID_TOL) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_int_list(spec: str) -> list[int]:
    values = parse_grid(spec)
    out = [int(round(v)) for v in values]
    if any(abs(v - o) > 1e-9 for v, o in zip(values, out)):
        raise ValueError("expected integers")
    return out


def _int(text: str) -> int:
    return int(text)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


def _strategy(text: str) -> str:
    if text not in STRATEGIES:
        raise ValueError(f"choose from {', '.join(STRATEGIES)}")
    return text


def _strategy_list(text: str) -> list[str]:
    return [_strategy(s.strip()) for s in text.split(",") if s.strip()]


def _str_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


@dataclass(frozen=True)
class Option:
    key: str
    parse: Callable[[str], Any]
    default: Any
    help: str


def _opt(key, parse, default, help):
    return Option(key, parse, default, help)


COMMON = [
    _opt("seed", _seed, 0, "master seed (unsigned 64-bit)"),
    _opt("output", str, None, "output file (default: stdout)"),
    _opt("workers", _int, None, f"worker processes (default: ${WORKERS_ENV} or 1)"),
]
TRIAL = [
    _opt("dist", AlphabetDistribution.parse, AlphabetDistribution.uniform(5),
         "uniform:k or comma-separated probabilities"),
    _opt("trials", _int, 1, "trials per cell"),
    _opt("row_sample", _int, None, "rows sampled for the vulnerable fraction (default: all)"),
    _opt("pair_sample", _int, None, "sampled pairs for a heuristic min_pair search"),
    _opt("budget", _int, EXHAUSTIVE_BUDGET, "pattern budget of the exhaustive adversary"),
    _opt("memory_cap", _int, MEMORY_CAP, "maximum database entries held in memory"),
]
SUBCOMMANDS: dict[str, tuple[str, list[Option]]] = {
    "capacity": ("tabulate adversarial and random matching capacities", [
        _opt("dist", AlphabetDistribution.parse, AlphabetDistribution.uniform(5),
             "uniform:k or comma-separated probabilities"),
        _opt("delta", parse_grid, parse_grid("0:1:0.05"), "budget grid start:stop:step or list"),
    ]),
    "simulate": ("run matching trials for one cell", TRIAL + [
        _opt("n", _int, None, "columns"),
        _opt("rate", _number, None, "growth rate R (m = ceil(2^(nR)))"),
        _opt("m", _int, None, "explicit row count (instead of rate)"),
        _opt("delta", _number, 0.0, "deletion budget fraction"),
        _opt("strategy", _strategy, "min_pair", "adversary: " + ", ".join(STRATEGIES)),
        _opt("save_db", str, None, "directory receiving each trial's databases"),
    ]),
    "vulnerability": ("vulnerable-row fractions for one cell", TRIAL + [
        _opt("n", _int, None, "columns"),
        _opt("rate", _number, None, "growth rate R (m = ceil(2^(nR)))"),
        _opt("m", _int, None, "explicit row count (instead of rate)"),
        _opt("delta", _number, 0.0, "deletion budget fraction"),
    ]),
    "sweep": ("aggregate trials over a parameter grid", TRIAL + [
        _opt("n", parse_int_list, None, "column counts (list or grid)"),
        _opt("rate", parse_grid, None, "growth rates (list or grid)"),
        _opt("m", parse_int_list, None, "explicit row counts (instead of rate)"),
        _opt("delta", parse_grid, [0.0], "budgets (list or grid)"),
        _opt("strategy", _strategy_list, ["min_pair"], "adversaries (comma list)"),
        _opt("vulnerability_only", lambda t: _bool(t), False, "skip the matching pipeline"),
    ]),
    "histogram-study": ("duplicate column-histogram probabilities", [
        _opt("dist", AlphabetDistribution.parse, AlphabetDistribution.uniform(5),
             "uniform:k or comma-separated probabilities"),
        _opt("n", _int, None, "columns"),
        _opt("m", parse_int_list, None, "row counts (list or grid)"),
        _opt("trials", _int, 200, "trials per row count"),
    ]),
    "ingest": ("estimate an entry law from a CSV file and report capacities", [
        _opt("columns", _str_list, None, "comma-separated column names to pool"),
        _opt("delta", parse_grid, parse_grid("0:1:0.1"), "budgets to report"),
        _opt("max_distinct", _int, MAX_DISTINCT, "largest accepted number of distinct values"),
    ]),
}


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


# --------------------------------------------------------------------------
# Config resolution
# --------------------------------------------------------------------------

def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one subcommand invocation."""

    command: str
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None


def resolve(command: str, args: argparse.Namespace) -> RunConfig:
    options = COMMON + SUBCOMMANDS[command][1]
    known = {o.key: o for o in options}
    raw = read_config_file(args.config) if args.config else {}
    for key in raw:
        if key not in known:
            raise ConfigError(key, f"unknown key for {command}")
    values = {}
    for opt in options:
        flag = getattr(args, opt.key, None)
        text = flag if flag is not None else raw.get(opt.key)
        if text is None:
            values[opt.key] = opt.default
            continue
        try:
            values[opt.key] = opt.parse(text)
        except (ValueError, UsageError) as exc:
            raise ConfigError(opt.key, str(exc)) from None
    if values["workers"] is None:
        env = os.environ.get(WORKERS_ENV, "1")
        try:
            values["workers"] = int(env)
        except ValueError:
            raise ConfigError(WORKERS_ENV, f"not an integer: {env!r}") from None
    if values["workers"] < 1:
        raise ConfigError("workers", "must be at least 1")
    if command == "ingest":
        values["csv_path"] = args.csv_path
    return RunConfig(command, values)


def _require(cfg: RunConfig, key: str):
    value = cfg.values.get(key)
    if value is None:
        raise ConfigError(key, "required")
    return value


def _strategy_of(cfg: RunConfig, kind: str) -> AdversaryStrategy:
    try:
        return AdversaryStrategy(kind, cfg.budget, cfg.pair_sample)
    except UsageError as exc:
        raise ConfigError("strategy", str(exc)) from None


def _trial_config(cfg: RunConfig, n, rate, m, delta, kind) -> TrialConfig:
    if (rate is None) == (m is None):
        raise ConfigError("rate", "give exactly one of rate and m")
    try:
        return TrialConfig(
            dist=cfg.dist, n=n, delta=delta, rate=rate, m=m,
            strategy=_strategy_of(cfg, kind), trials=cfg.trials, master_seed=cfg.seed,
            row_sample=cfg.row_sample, memory_cap=cfg.memory_cap,
        )
    except ConfigError:
        raise
    except UsageError as exc:
        raise ConfigError("config", str(exc)) from None


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------

def fmt(value) -> str:
    """Locale-free cell text: shortest round-trip floats, 0/1 flags, blank for missing."""
    if value is None:
        return ""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(cfg: RunConfig, header: Sequence[str], rows, preamble: Sequence[str] = ()) -> None:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_capacity(cfg: RunConfig) -> int:
    for x in cfg.delta:
        if not 0.0 <= x <= 1.0:
            raise ConfigError("delta", f"{x} lies outside [0, 1]")
    curve = capacity_curve(cfg.dist, cfg.delta)
    rows = [(p.delta, p.adv_bits, p.random_bits, curve.qhat, curve.threshold) for p in curve.points]
    write_csv(cfg, CAPACITY_HEADER, rows)
    return 0


def _single_cell(cfg: RunConfig, kind: str = "min_pair") -> TrialConfig:
    return _trial_config(cfg, _require(cfg, "n"), cfg.rate, cfg.m, cfg.delta, kind)


def _save_instances(cfg: RunConfig, tc: TrialConfig) -> None:
    dest = Path(cfg.save_db)
    dest.mkdir(parents=True, exist_ok=True)
    for t in range(tc.trials):
        inst = build_instance(tc, t)
        write_database(inst.db, dest / f"trial{t}_unlabeled.txt")
        write_database(inst.labeled, dest / f"trial{t}_labeled.txt")
        with open(dest / f"trial{t}_truth.txt", "w") as fh:
            fh.write("deleted_columns " + " ".join(map(str, inst.pattern.one_based())) + "\n")
            fh.write("labeled_row_of " + " ".join(map(str, inst.perm.forward.tolist())) + "\n")


def cmd_simulate(cfg: RunConfig) -> int:
    tc = _single_cell(cfg, cfg.strategy)
    outcomes = run_trials(tc, pipeline=True, workers=cfg.workers)
    if cfg.save_db:
        _save_instances(cfg, tc)
    label = tc.strategy.kind + ("(heuristic)" if tc.strategy.heuristic else "")
    rows = [
        (tc.n, tc.rows, tc.rate_eff, tc.delta_eff, label, o.trial, o.error_fraction,
         o.detection_error, o.collided_rows, o.vulnerable_fraction, tc.master_seed)
        for o in outcomes
    ]
    write_csv(cfg, SIMULATE_HEADER, rows)
    return 0


def cmd_vulnerability(cfg: RunConfig) -> int:
    tc = _single_cell(cfg)
    outcomes = run_trials(tc, pipeline=False, workers=cfg.workers)
    rows = [
        (tc.n, tc.rows, tc.rate_eff, tc.delta_eff, o.trial, o.vulnerable_fraction, tc.master_seed)
        for o in outcomes
    ]
    write_csv(cfg, VULNERABILITY_HEADER, rows)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    ns = _require(cfg, "n")
    if (cfg.rate is None) == (cfg.m is None):
        raise ConfigError("rate", "give exactly one of rate and m")
    sizes = [("rate", r) for r in cfg.rate] if cfg.rate is not None else [("m", m) for m in cfg.m]
    grid = []
    for n in ns:
        for key, size in sizes:
            for delta in cfg.delta:
                for kind in cfg.strategy:
                    rate, m = (size, None) if key == "rate" else (None, size)
                    grid.append(_trial_config(cfg, n, rate, m, delta, kind))
    results = sweep(grid, pipeline=not cfg.vulnerability_only, workers=cfg.workers)
    status = 0
    for row in results:
        if row.error:
            print(f"cell n={row.n} m={row.m} delta={row.delta_eff} "
                  f"strategy={row.strategy} failed: {row.error}", file=sys.stderr)
            status = max(status, 3 if row.error.startswith("CapacityError") else 2)
    rows = []
    for r in results:
        if r.error:
            rows.append((r.n, r.m or None, None if math.isnan(r.rate_eff) else r.rate_eff,
                         r.delta_eff, r.strategy, r.trials) + (None,) * 5
                        + (r.C_adv, r.C_random, None if math.isnan(r.margin) else r.margin))
        else:
            rows.append((r.n, r.m, r.rate_eff, r.delta_eff, r.strategy, r.trials, r.err_mean,
                         r.err_stderr, r.vuln_mean, r.vuln_stderr, r.det_err_rate, r.C_adv,
                         r.C_random, r.margin))
    write_csv(cfg, SWEEP_HEADER, rows)
    return status


def cmd_histogram_study(cfg: RunConfig) -> int:
    n, ms = _require(cfg, "n"), _require(cfg, "m")
    try:
        table = histogram_uniqueness_study(n, ms, cfg.dist, cfg.trials, cfg.seed)
    except UsageError as exc:
        raise ConfigError("config", str(exc)) from None
    for row in table:
        if row.note:
            print(f"m={row.m}: bound not computed ({row.note})", file=sys.stderr)
    rows = [
        (r.n, r.m, r.alphabet, r.trials, r.dup_prob_emp, r.dup_prob_stderr, r.bound_exact,
         r.scaling_ref)
        for r in table
    ]
    write_csv(cfg, HISTOGRAM_HEADER, rows)
    return 0


def estimate_distribution(
    path: str, columns: Sequence[str], max_distinct: int = MAX_DISTINCT
) -> tuple[AlphabetDistribution, list[str], int]:
    """Pooled empirical law of the selected categorical columns.

    Returns the law, its symbol values (sorted; symbol ``s`` is ``values[s-1]``)
    and the number of data rows. Blank cells count as missing.
    """
    if not columns:
        raise ConfigError("columns", "select at least one column")
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in columns if c not in header]
            if missing:
                raise ConfigError("columns", f"not in the CSV header: {', '.join(missing)}")
            counts: Counter = Counter()
            nrows = 0
            for record in reader:
                nrows += 1
                for c in columns:
                    value = (record.get(c) or "").strip()
                    if value:
                        counts[value] += 1
                if len(counts) > max_distinct:
                    raise ConfigError(
                        "max_distinct",
                        f"more than {max_distinct} distinct values; columns look non-categorical",
                    )
    except OSError as exc:
        raise ConfigError("csv_path", f"cannot read {path}: {exc.strerror}") from None
    values = sorted(counts)
    if len(values) < 2:
        raise ConfigError("columns", f"need at least two distinct values, found {len(values)}")
    dist = AlphabetDistribution.from_weights([counts[v] for v in values])
    return dist, values, nrows


def cmd_ingest(cfg: RunConfig) -> int:
    columns = _require(cfg, "columns")
    dist, values, nrows = estimate_distribution(cfg.csv_path, columns, cfg.max_distinct)
    for x in cfg.delta:
        if not 0.0 <= x <= 1.0:
            raise ConfigError("delta", f"{x} lies outside [0, 1]")
    rate = effective_rate(nrows, len(columns)) if nrows else 0.0
    preamble = [
        f"dist = {dist.spec()}",
        "symbols = " + ",".join(values),
        f"qhat = {fmt(collision_param(dist))}",
        f"zero_capacity_budget = {fmt(zero_capacity_budget(dist))}",
        f"rows = {nrows}",
        f"columns = {len(columns)}",
        f"rate = {fmt(rate)}",
        POOLING_CAVEAT,
    ]
    rows = []
    for x in cfg.delta:
        c_adv = adv_capacity(dist, x)
        rows.append((x, c_adv, random_capacity(dist, x), rate - c_adv))
    write_csv(cfg, INGEST_HEADER, rows, preamble)
    return 0


COMMANDS = {
    "capacity": cmd_capacity,
    "simulate": cmd_simulate,
    "vulnerability": cmd_vulnerability,
    "sweep": cmd_sweep,
    "histogram-study": cmd_histogram_study,
    "ingest": cmd_ingest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advmatch", description="Database matching under adversarial column deletions."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, options) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        if name == "ingest":
            p.add_argument("csv_path", help="CSV file with a header row")
        p.add_argument("--config", help="flat key = value file; flags override it")
        for opt in COMMON + options:
            p.add_argument("--" + opt.key.replace("_", "-"), dest=opt.key, default=None,
                           metavar=opt.key.upper(), help=opt.help)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except CapacityError as exc:
        print(f"advmatch: {exc}", file=sys.stderr)
        return 3
    except (AdvMatchError, ValueError) as exc:
        print(f"advmatch: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
