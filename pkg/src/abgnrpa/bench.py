"""Benchmark harness: suite execution, result journal, aggregation and reports.

Records are appended to a newline-delimited JSON journal as runs finish. A
sidecar ``<journal>.done`` file lists the keys of completed runs so that an
interrupted suite can be resumed without repeating or duplicating work.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from scipy.stats import rankdata

from .heuristics import BiasNorm, HeuristicKind
from .instance import Instance, UBTable, find_instance, read_instance
from .policy import SamplerParams
from .search import AlgoKind, RunConfig, TwoOptMode, run_algorithm

__all__ = [
    "SuiteConfig",
    "RunRecord",
    "Cell",
    "SummaryTables",
    "derive_seed",
    "load_suite",
    "run_suite",
    "read_records",
    "aggregate",
    "report",
    "summary_from_json",
    "pearson",
    "spearman",
]

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, instance: str, algo: str, run_index: int) -> int:
    """``base_seed`` xor a stable 64-bit hash of the run's identity."""
    key = f"{instance}\x00{algo}\x00{run_index}".encode()
    h = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
    return (base_seed ^ h) & _MASK64


# -- correlation --------------------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Two-pass Pearson correlation; raises ValueError when undefined."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("pearson needs sequences of equal length")
    if n < 2:
        raise ValueError("pearson needs at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of the average ranks."""
    return pearson(list(rankdata(xs)), list(rankdata(ys)))


# -- suites ------------------------------------------------------------------


@dataclass
class SuiteConfig:
    """What to run; ``instances`` holds ``(dataset, path or name)`` pairs.

    A bare name is resolved with :func:`abgnrpa.instance.find_instance`.
    ``algo_playouts`` overrides the playout budget of single algorithms, for
    instance ``{"RandGreedy": 1}`` for single-playout baselines.
    """

    instances: list[tuple[str, str]]
    algos: list[AlgoKind]
    runs_per_pair: int = 1
    budget_seconds: float | None = None
    budget_playouts: int | None = None
    base_seed: int = 0
    parallelism: int = 1
    level: int = 1
    nested_iterations: int = 100
    heuristic: HeuristicKind = HeuristicKind.EET
    bias_norm: BiasNorm = BiasNorm.MEAN
    params: SamplerParams = field(default_factory=SamplerParams)
    two_opt: TwoOptMode = TwoOptMode.OFF
    two_opt_seconds: float | None = None
    algo_playouts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.algos = [AlgoKind.parse(a) for a in self.algos]
        self.instances = [tuple(x) for x in self.instances]
        if self.runs_per_pair < 1:
            raise ValueError("runs_per_pair must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.budget_seconds is None and self.budget_playouts is None:
            raise ValueError("suite needs budget_seconds or budget_playouts")

    def run_config(self, algo: AlgoKind, seed: int) -> RunConfig:
        playouts = self.algo_playouts.get(algo.value, self.budget_playouts)
        seconds = self.budget_seconds
        if algo.value in self.algo_playouts and seconds is not None:
            # the per-algorithm playout cap replaces the time budget
            seconds = None
        return RunConfig(algo, budget_seconds=seconds, budget_playouts=playouts, level=self.level,
                         nested_iterations=self.nested_iterations, params=self.params,
                         heuristic=self.heuristic, bias_norm=self.bias_norm, seed=seed,
                         two_opt=self.two_opt, two_opt_seconds=self.two_opt_seconds)


def _load_mapping(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    return tomllib.loads(text)


def load_suite(path: str | os.PathLike) -> SuiteConfig:
    """Read a suite from TOML (or JSON when the suffix is ``.json``).

    Example::

        algos = ["GNRPA", "ABGNRPA"]
        runs_per_pair = 20
        budget_seconds = 5
        instances = [["kacem", "k1"], ["brandimarte", "data/mk01.fjs"]]

        [params]
        gamma = 1e-5
    """
    data = _load_mapping(Path(path))
    params = SamplerParams(**data.pop("params", {}))
    known = set(SuiteConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown suite keys: {', '.join(sorted(unknown))}")
    return SuiteConfig(params=params, **data)


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    instance: str
    algo: str
    seed: int
    makespan: int
    elapsed_s: float
    playouts: int
    bias_deviation_pct: float | None = None
    run_index: int = 0

    @property
    def key(self) -> str:
        return f"{self.dataset}/{self.instance}/{self.algo}/{self.run_index}"

    def to_json(self) -> str:
        d = asdict(self)
        if d["bias_deviation_pct"] is None:
            del d["bias_deviation_pct"]
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(dataset=d["dataset"], instance=d["instance"], algo=d["algo"], seed=int(d["seed"]),
                   makespan=int(d["makespan"]), elapsed_s=float(d["elapsed_s"]),
                   playouts=int(d["playouts"]), bias_deviation_pct=d.get("bias_deviation_pct"),
                   run_index=int(d.get("run_index", 0)))


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    """Load a journal, skipping a torn last line and duplicate run keys."""
    out = {}
    p = Path(path)
    if not p.exists():
        return []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = RunRecord.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            log.warning("%s:%d: skipping unreadable record", path, lineno)
            continue
        out.setdefault(rec.key, rec)
    return list(out.values())


def _resolve(dataset: str, ref: str) -> Instance:
    path = Path(ref)
    if not path.is_file():
        found = find_instance(dataset, ref)
        if found is None:
            raise FileNotFoundError(f"instance {dataset}/{ref} not found")
        path = found
    return read_instance(path, dataset=dataset)


def _execute(inst: Instance, cfg: RunConfig, dataset: str, algo: str, run_index: int) -> RunRecord:
    res = run_algorithm(inst, cfg)
    return RunRecord(dataset=dataset, instance=inst.name, algo=algo, seed=cfg.seed,
                     makespan=res.best.makespan, elapsed_s=round(res.elapsed, 6),
                     playouts=res.playout_count, bias_deviation_pct=res.bias_deviation_pct,
                     run_index=run_index)


def run_suite(cfg: SuiteConfig, out: str | os.PathLike | None = None) -> list[RunRecord]:
    """Run every (instance, algorithm, run index) not already in the journal.

    Returns all records of the suite, including ones loaded from an earlier
    interrupted invocation. With ``parallelism > 1`` runs go to a process
    pool and only this process writes to the journal.
    """
    journal = Path(out) if out is not None else None
    marker = journal.with_name(journal.name + ".done") if journal is not None else None
    done: dict[str, RunRecord] = {}
    if journal is not None:
        finished = set(marker.read_text().split()) if marker.exists() else set()
        for rec in read_records(journal):
            if rec.key in finished:
                done[rec.key] = rec

    jobs = []
    for dataset, ref in cfg.instances:
        try:
            inst = _resolve(dataset, ref)
        except (OSError, ValueError) as exc:
            log.error("skipping instance %s/%s: %s", dataset, ref, exc)
            continue
        for algo in cfg.algos:
            for i in range(cfg.runs_per_pair):
                key = f"{dataset}/{inst.name}/{algo.value}/{i}"
                if key in done:
                    continue
                seed = derive_seed(cfg.base_seed, inst.name, algo.value, i)
                jobs.append((inst, cfg.run_config(algo, seed), dataset, algo.value, i))

    records = dict(done)

    def write(rec: RunRecord) -> None:
        records[rec.key] = rec
        if journal is None:
            return
        with journal.open("a") as fh:
            fh.write(rec.to_json() + "\n")
        with marker.open("a") as fh:
            fh.write(rec.key + "\n")

    if cfg.parallelism == 1 or len(jobs) <= 1:
        for job in jobs:
            write(_execute(*job))
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = {pool.submit(_execute, *job): job for job in jobs}
            for fut in as_completed(futures):
                write(fut.result())
    order = {}
    for dataset, ref in cfg.instances:
        order.setdefault(dataset, len(order))
    return sorted(records.values(), key=lambda r: (order.get(r.dataset, 0), r.instance, r.algo, r.run_index))


# -- aggregation -------------------------------------------------------------


@dataclass
class Cell:
    runs: int
    min: int
    mean: float
    std: float
    ub: int | None = None
    gap_min_pct: float | None = None
    gap_mean_pct: float | None = None
    bias_deviation_pct: float | None = None


@dataclass
class SummaryTables:
    algos: list[str] = field(default_factory=list)
    # (dataset, instance) -> algo -> Cell, insertion ordered
    cells: dict[tuple[str, str], dict[str, Cell]] = field(default_factory=dict)
    best_value_frequency: dict[str, int] = field(default_factory=dict)
    ub_reached: dict[str, int] = field(default_factory=dict)
    average_std_pct: dict[str, float] = field(default_factory=dict)
    average_gap_min_pct: dict[str, float | None] = field(default_factory=dict)
    average_gap_mean_pct: dict[str, float | None] = field(default_factory=dict)
    average_rank: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "algos": self.algos,
            "cells": [
                {"dataset": d, "instance": i, "algo": a, **asdict(c)}
                for (d, i), row in self.cells.items() for a, c in row.items()
            ],
            "best_value_frequency": self.best_value_frequency,
            "ub_reached": self.ub_reached,
            "average_std_pct": self.average_std_pct,
            "average_gap_min_pct": self.average_gap_min_pct,
            "average_gap_mean_pct": self.average_gap_mean_pct,
            "average_rank": self.average_rank,
            "warnings": self.warnings,
        }


def summary_from_json(text: str) -> SummaryTables:
    d = json.loads(text)
    s = SummaryTables(algos=list(d["algos"]))
    for c in d["cells"]:
        key = (c.pop("dataset"), c.pop("instance"))
        algo = c.pop("algo")
        s.cells.setdefault(key, {})[algo] = Cell(**c)
    for name in ("best_value_frequency", "ub_reached", "average_std_pct", "average_gap_min_pct",
                 "average_gap_mean_pct", "average_rank"):
        setattr(s, name, dict(d[name]))
    s.warnings = list(d["warnings"])
    return s


def _gap(value: float, ub: int) -> float:
    return (value - ub) / ub * 100.0


def _mean_or_none(values: list[float]) -> float | None:
    return statistics.fmean(values) if values else None


def aggregate(records: Iterable[RunRecord], ub: UBTable | None = None) -> SummaryTables:
    """Per-instance statistics and per-algorithm summary metrics.

    Standard deviations are population deviations over the runs. An
    algorithm's rank on an instance is its position by mean makespan among
    the algorithms run on it, ties sharing the average rank.
    """
    ub = ub if ub is not None else UBTable()
    groups: dict[tuple[str, str], dict[str, list[RunRecord]]] = {}
    algos: list[str] = []
    for r in records:
        groups.setdefault((r.dataset, r.instance), {}).setdefault(r.algo, []).append(r)
        if r.algo not in algos:
            algos.append(r.algo)
    algos.sort(key=lambda a: [k.value for k in AlgoKind].index(a) if a in AlgoKind._value2member_map_ else 99)
    s = SummaryTables(algos=algos)
    freq = dict.fromkeys(algos, 0)
    reached = dict.fromkeys(algos, 0)
    std_pct: dict[str, list[float]] = {a: [] for a in algos}
    gmin: dict[str, list[float]] = {a: [] for a in algos}
    gmean: dict[str, list[float]] = {a: [] for a in algos}
    ranks: dict[str, list[float]] = {a: [] for a in algos}
    for key in sorted(groups):
        by_algo = groups[key]
        entry = ub.lookup(*key)
        if entry is None:
            s.warnings.append(f"no upper bound for {key[0]}/{key[1]}; excluded from gap and UB metrics")
        row = {}
        for a in algos:
            if a not in by_algo:
                continue
            ms = [r.makespan for r in by_algo[a]]
            devs = [r.bias_deviation_pct for r in by_algo[a] if r.bias_deviation_pct is not None]
            cell = Cell(runs=len(ms), min=min(ms), mean=statistics.fmean(ms), std=statistics.pstdev(ms),
                        bias_deviation_pct=_mean_or_none(devs))
            if entry is not None:
                cell.ub = entry.upper_bound
                cell.gap_min_pct = _gap(cell.min, entry.upper_bound)
                cell.gap_mean_pct = _gap(cell.mean, entry.upper_bound)
                gmin[a].append(cell.gap_min_pct)
                gmean[a].append(cell.gap_mean_pct)
                if cell.min <= entry.upper_bound:
                    reached[a] += 1
            std_pct[a].append(cell.std / cell.mean * 100.0)
            row[a] = cell
        s.cells[key] = row
        best = min(c.min for c in row.values())
        for a, c in row.items():
            if c.min == best:
                freq[a] += 1
        present = list(row)
        for a, rk in zip(present, rankdata([row[a].mean for a in present])):
            ranks[a].append(float(rk))
    s.best_value_frequency = freq
    s.ub_reached = reached
    s.average_std_pct = {a: statistics.fmean(v) for a, v in std_pct.items() if v}
    s.average_gap_min_pct = {a: _mean_or_none(gmin[a]) for a in algos}
    s.average_gap_mean_pct = {a: _mean_or_none(gmean[a]) for a in algos}
    s.average_rank = {a: statistics.fmean(v) for a, v in ranks.items() if v}
    for w in s.warnings:
        log.warning(w)
    return s


# -- reports -----------------------------------------------------------------

_CSV_COLUMNS = ["dataset", "instance", "algo", "runs", "min", "mean", "std", "ub", "gap_min_pct",
                "gap_mean_pct", "bias_deviation_pct"]


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}".rstrip("0").rstrip(".") if math.isfinite(v) else str(v)
    return str(v)


def _csv_report(s: SummaryTables) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_COLUMNS)
    for (d, i), row in s.cells.items():
        for a, c in row.items():
            w.writerow([d, i, a, c.runs, c.min, _num(c.mean), _num(c.std), _num(c.ub),
                        _num(c.gap_min_pct), _num(c.gap_mean_pct), _num(c.bias_deviation_pct)])
    return buf.getvalue()


def _markdown_report(s: SummaryTables) -> str:
    lines = ["| dataset | instance | UB | " + " | ".join(s.algos) + " |",
             "|" + "---|" * (3 + len(s.algos))]
    for (d, i), row in s.cells.items():
        ub = next((c.ub for c in row.values() if c.ub is not None), None)
        best = min(c.min for c in row.values())
        cells = []
        for a in s.algos:
            c = row.get(a)
            if c is None:
                cells.append("")
                continue
            text = f"{c.min} / {c.mean:.2f}"
            cells.append(f"**{text}**" if c.min == best else text)
        lines.append(f"| {d} | {i} | {_num(ub)} | " + " | ".join(cells) + " |")
    lines += ["", "| metric | " + " | ".join(s.algos) + " |", "|" + "---|" * (1 + len(s.algos))]
    metrics = [
        ("best-value frequency", s.best_value_frequency),
        ("UB reached", s.ub_reached),
        ("average std %", s.average_std_pct),
        ("average gap on min %", s.average_gap_min_pct),
        ("average gap on mean %", s.average_gap_mean_pct),
        ("average rank (mean)", s.average_rank),
    ]
    for label, values in metrics:
        lines.append(f"| {label} | " + " | ".join(_num(values.get(a)) for a in s.algos) + " |")
    return "\n".join(lines) + "\n"


def report(summary: SummaryTables, fmt: str = "markdown") -> str:
    """Serialize a summary as ``csv`` (per-cell rows), ``json`` or ``markdown``."""
    if fmt == "csv":
        return _csv_report(summary)
    if fmt == "json":
        return json.dumps(summary.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt == "markdown":
        return _markdown_report(summary)
    raise ValueError(f"unknown report format {fmt!r}")
