"""FJSSP instances: data model, text-format parsing and the upper-bound table.

The text format is the one shared by the Brandimarte, Kacem and Hurink
benchmark files::

    <n_jobs> <n_machines> [<avg_flexibility>]
    <n_ops> <k> <machine> <duration> ... <k> <machine> <duration> ...
    ...

Machine indices are 1-based on disk and 0-based in memory.

>>> inst = parse_instance("2 2 1.5\\n1 2 1 3 2 5\\n1 1 2 4\\n", "tiny")
>>> inst.machine_count, inst.job_count, inst.operation_count
(2, 2, 2)
>>> inst.jobs[0].operations[0].alternatives
(Alternative(machine=0, duration=3), Alternative(machine=1, duration=5))
>>> format_instance(inst)
'2 2\\n1 2 1 3 2 5\\n1 1 2 4\\n'
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "Alternative",
    "ActionId",
    "OperationSpec",
    "JobSpec",
    "Instance",
    "InstanceParseError",
    "UBEntry",
    "UBTable",
    "parse_instance",
    "format_instance",
    "read_instance",
    "validate_instance",
    "load_ub_table",
    "bundled_ub_table",
    "instance_search_path",
    "find_instance",
    "reduce_instance",
    "random_instance",
    "iter_instances",
    "bundled_instances",
    "INSTANCE_DIR_ENV",
]

#: Colon-separated list of directories searched by :func:`find_instance`
#: before the bundled data directory.
INSTANCE_DIR_ENV = "ABGNRPA_INSTANCE_DIR"


class Alternative(NamedTuple):
    machine: int
    duration: int


class ActionId(NamedTuple):
    """Assignment of operation ``op`` of ``job`` to ``machine``; all 0-based."""

    job: int
    op: int
    machine: int


@dataclass(frozen=True)
class OperationSpec:
    alternatives: tuple[Alternative, ...]

    @cached_property
    def min_duration(self) -> int:
        return min(a.duration for a in self.alternatives)

    @cached_property
    def duration_on(self) -> dict[int, int]:
        return {a.machine: a.duration for a in self.alternatives}


@dataclass(frozen=True)
class JobSpec:
    operations: tuple[OperationSpec, ...]


@dataclass(frozen=True)
class Instance:
    """Immutable FJSSP instance.

    Derived lookup tables (remaining minimal work per job, per-operation
    action lists) are computed lazily and cached on the instance.
    """

    name: str
    machine_count: int
    jobs: tuple[JobSpec, ...]
    dataset: str = field(default="", compare=False)

    @property
    def job_count(self) -> int:
        return len(self.jobs)

    @cached_property
    def operation_count(self) -> int:
        return sum(len(j.operations) for j in self.jobs)

    @cached_property
    def job_lengths(self) -> tuple[int, ...]:
        return tuple(len(j.operations) for j in self.jobs)

    @cached_property
    def remaining_min_work(self) -> tuple[tuple[int, ...], ...]:
        """``remaining_min_work[i][k]``: sum of minimal durations of ops k.. of job i.

        Each row has one trailing zero so that a finished job indexes to 0.
        """
        rows = []
        for job in self.jobs:
            acc = [0] * (len(job.operations) + 1)
            for k in range(len(job.operations) - 1, -1, -1):
                acc[k] = acc[k + 1] + job.operations[k].min_duration
            rows.append(tuple(acc))
        return tuple(rows)

    @cached_property
    def durations(self) -> tuple[tuple[dict[int, int], ...], ...]:
        return tuple(tuple(op.duration_on for op in job.operations) for job in self.jobs)

    @cached_property
    def action_table(self) -> tuple[tuple[tuple[ActionId, ...], ...], ...]:
        """``action_table[i][k]``: the actions of op k of job i, ascending machine."""
        return tuple(
            tuple(
                tuple(ActionId(i, k, m) for m in sorted(op.duration_on))
                for k, op in enumerate(job.operations)
            )
            for i, job in enumerate(self.jobs)
        )

    @cached_property
    def mean_flexibility(self) -> float:
        total = sum(len(op.alternatives) for job in self.jobs for op in job.operations)
        return total / self.operation_count

    def duration(self, job: int, op: int, machine: int) -> int:
        return self.jobs[job].operations[op].duration_on[machine]

    def __repr__(self) -> str:
        return (
            f"Instance(name={self.name!r}, jobs={self.job_count}, "
            f"machines={self.machine_count}, operations={self.operation_count})"
        )


class InstanceParseError(ValueError):
    """Malformed instance text; carries the 1-based line and token position."""

    def __init__(self, message: str, line: int, token: int):
        super().__init__(f"line {line}, token {token}: {message}")
        self.line = line
        self.token = token


class _Tokens:
    """Whitespace token stream that remembers where every token came from."""

    def __init__(self, text: str, first_line: int = 1):
        self._items: list[tuple[str, int, int]] = []
        for lineno, raw in enumerate(text.splitlines(), start=first_line):
            for pos, tok in enumerate(raw.split(), start=1):
                self._items.append((tok, lineno, pos))
        self._next = 0
        self._last_line = first_line + max(len(text.splitlines()) - 1, 0)

    def __bool__(self) -> bool:
        return self._next < len(self._items)

    def peek_position(self) -> tuple[int, int]:
        if self:
            _, line, pos = self._items[self._next]
            return line, pos
        return self._last_line + 1, 1

    def int(self, what: str, minimum: int | None = None) -> int:
        if not self:
            line, pos = self.peek_position()
            raise InstanceParseError(f"truncated file, expected {what}", line, pos)
        tok, line, pos = self._items[self._next]
        self._next += 1
        try:
            value = int(tok)
        except ValueError:
            raise InstanceParseError(f"malformed token {tok!r} for {what}", line, pos) from None
        if minimum is not None and value < minimum:
            raise InstanceParseError(f"{what} must be >= {minimum}, got {value}", line, pos)
        return value

    def skip_number(self, what: str) -> None:
        tok, line, pos = self._items[self._next]
        self._next += 1
        try:
            float(tok)
        except ValueError:
            raise InstanceParseError(f"malformed token {tok!r} for {what}", line, pos) from None

    def last_position(self) -> tuple[int, int]:
        _, line, pos = self._items[self._next - 1]
        return line, pos


def parse_instance(text: str, name: str = "", dataset: str = "") -> Instance:
    """Parse the standard FJSSP text format; see the module docstring.

    Leading lines starting with ``#`` are treated as comments. Raises
    :class:`InstanceParseError` on any malformed input.
    """
    lines = text.splitlines()
    skipped = 0
    while skipped < len(lines) and (not lines[skipped].strip() or lines[skipped].lstrip().startswith("#")):
        skipped += 1
    header = lines[skipped].split() if skipped < len(lines) else []
    if len(header) < 2:
        raise InstanceParseError("header must hold <n_jobs> <n_machines>", skipped + 1, len(header) + 1)
    head = _Tokens(lines[skipped], first_line=skipped + 1)
    n_jobs = head.int("job count", minimum=1)
    n_machines = head.int("machine count", minimum=1)
    if head:
        head.skip_number("average flexibility")
    if head:
        line, pos = head.peek_position()
        raise InstanceParseError("unexpected extra header token", line, pos)

    toks = _Tokens("\n".join(lines[skipped + 1 :]), first_line=skipped + 2)
    jobs = []
    for _ in range(n_jobs):
        n_ops = toks.int("operation count", minimum=1)
        ops = []
        for _ in range(n_ops):
            k = toks.int("alternative count", minimum=1)
            alts = []
            seen = set()
            for _ in range(k):
                machine = toks.int("machine index")
                if not 1 <= machine <= n_machines:
                    line, pos = toks.last_position()
                    raise InstanceParseError(
                        f"machine index {machine} outside [1, {n_machines}]", line, pos
                    )
                if machine in seen:
                    line, pos = toks.last_position()
                    raise InstanceParseError(f"duplicate machine {machine} in one operation", line, pos)
                seen.add(machine)
                duration = toks.int("duration", minimum=1)
                alts.append(Alternative(machine - 1, duration))
            ops.append(OperationSpec(tuple(alts)))
        jobs.append(JobSpec(tuple(ops)))
    if toks:
        line, pos = toks.peek_position()
        raise InstanceParseError("unexpected trailing token", line, pos)
    return Instance(name=name, machine_count=n_machines, jobs=tuple(jobs), dataset=dataset)


def format_instance(inst: Instance) -> str:
    """Serialize back to the 1-based text format (no flexibility token)."""
    out = [f"{inst.job_count} {inst.machine_count}"]
    for job in inst.jobs:
        toks = [str(len(job.operations))]
        for op in job.operations:
            toks.append(str(len(op.alternatives)))
            for alt in op.alternatives:
                toks.append(f"{alt.machine + 1} {alt.duration}")
        out.append(" ".join(toks))
    return "\n".join(out) + "\n"


def read_instance(path: str | os.PathLike, dataset: str = "") -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem, dataset=dataset)


def validate_instance(inst: Instance) -> list[str]:
    """Return every invariant violation; an empty list means the instance is valid."""
    errors = []
    if inst.machine_count < 1:
        errors.append("nonpositive machine count")
    if not inst.jobs:
        errors.append("no jobs")
    for i, job in enumerate(inst.jobs):
        if not job.operations:
            errors.append(f"job {i}: empty job")
        for j, op in enumerate(job.operations):
            where = f"job {i} op {j}"
            if not op.alternatives:
                errors.append(f"{where}: no alternatives")
            machines = [a.machine for a in op.alternatives]
            if len(set(machines)) != len(machines):
                errors.append(f"{where}: duplicate machine")
            for a in op.alternatives:
                if a.duration < 1:
                    errors.append(f"{where}: nonpositive duration {a.duration}")
                if not 0 <= a.machine < inst.machine_count:
                    errors.append(f"{where}: machine {a.machine} out of range")
    return errors


def reduce_instance(inst: Instance, jobs: int, ops_per_job: int) -> Instance:
    """Keep the first ``jobs`` jobs and the first ``ops_per_job`` operations of each.

    Machine count is preserved. Useful for building instances small enough
    for exhaustive enumeration.
    """
    kept = tuple(JobSpec(job.operations[:ops_per_job]) for job in inst.jobs[:jobs])
    return Instance(
        name=f"{inst.name}_r{jobs}x{ops_per_job}",
        machine_count=inst.machine_count,
        jobs=kept,
        dataset=inst.dataset,
    )


def random_instance(seed: int, jobs: int, machines: int, ops: tuple[int, int] = (1, 3),
                    flexibility: tuple[int, int] = (1, 2), durations: tuple[int, int] = (1, 9),
                    name: str | None = None) -> Instance:
    """Seeded random instance; every range is inclusive."""
    import random

    rng = random.Random(seed)
    lo, hi = flexibility
    hi = min(hi, machines)
    out = []
    for _ in range(jobs):
        job_ops = []
        for _ in range(rng.randint(*ops)):
            chosen = sorted(rng.sample(range(machines), rng.randint(min(lo, hi), hi)))
            job_ops.append(OperationSpec(tuple(Alternative(m, rng.randint(*durations)) for m in chosen)))
        out.append(JobSpec(tuple(job_ops)))
    return Instance(name=name or f"rand{seed}_{jobs}x{machines}", machine_count=machines,
                    jobs=tuple(out), dataset="synthetic")


# -- instance lookup -------------------------------------------------------

_SUFFIXES = (".fjs", ".txt", "")


def instance_search_path() -> list[Path]:
    dirs = [Path(p) for p in os.environ.get(INSTANCE_DIR_ENV, "").split(os.pathsep) if p]
    dirs.append(Path(str(resources.files("abgnrpa") / "data" / "instances")))
    return dirs


def find_instance(dataset: str, name: str) -> Path | None:
    """Locate ``<dir>/<dataset>/<name>{.fjs,.txt}`` on :func:`instance_search_path`.

    Hurink datasets may also be laid out as ``hurink/<edata|rdata|vdata>/``.
    """
    subdirs = [dataset]
    if dataset.startswith("hurink_"):
        subdirs.append(os.path.join("hurink", dataset.split("_", 1)[1]))
    for root in instance_search_path():
        for sub in subdirs:
            for suffix in _SUFFIXES:
                candidate = root / sub / f"{name}{suffix}"
                if candidate.is_file():
                    return candidate
    return None


# -- upper bounds ------------------------------------------------------------


class UBEntry(NamedTuple):
    upper_bound: int
    optimal: bool


class UBTable(dict):
    """Mapping ``(dataset, instance) -> UBEntry``."""

    def lookup(self, dataset: str, instance: str) -> UBEntry | None:
        return self.get((dataset, instance))


def _ub_rows(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        yield lineno, [c.strip() for c in row]


def load_ub_table(text: str) -> UBTable:
    """Parse ``dataset,instance,ub,optimal_flag`` lines. A header row is allowed."""
    table = UBTable()
    for lineno, row in _ub_rows(text):
        if row[:3] == ["dataset", "instance", "ub"]:
            continue
        if len(row) != 4:
            raise ValueError(f"upper-bound table line {lineno}: expected 4 fields, got {len(row)}")
        dataset, name, ub, flag = row
        try:
            ub_value = int(ub)
        except ValueError:
            raise ValueError(f"upper-bound table line {lineno}: bad bound {ub!r}") from None
        if ub_value < 1 or flag not in ("0", "1"):
            raise ValueError(f"upper-bound table line {lineno}: bad bound or flag")
        table[(dataset, name)] = UBEntry(ub_value, flag == "1")
    return table


def bundled_ub_table() -> UBTable:
    """Best known makespans shipped with the package."""
    text = (resources.files("abgnrpa") / "data" / "upper_bounds.csv").read_text()
    return load_ub_table(text)


def bundled_instances() -> list[Instance]:
    """Every instance file shipped in the package data directory."""
    root = Path(str(resources.files("abgnrpa") / "data" / "instances"))
    return [read_instance(p, dataset=p.parent.name) for p in sorted(root.glob("*/*.fjs"))]


def iter_instances(entries: Iterable[tuple[str, str]]) -> Iterator[Instance]:
    for dataset, name in entries:
        path = find_instance(dataset, name)
        if path is None:
            raise FileNotFoundError(f"instance {dataset}/{name} not found on {instance_search_path()}")
        yield read_instance(path, dataset=dataset)
