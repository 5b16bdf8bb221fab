"""Exhaustive branch statistics of small instances.

A branch is the subtree fixed by the first two decisions from the empty
schedule. For every branch all completions are enumerated, and the
correlation between the branch minimum and the branch mean tells how
informative the average playout outcome is about the best outcome.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .instance import ActionId, Instance
from .schedule import ScheduleState

__all__ = [
    "BranchPrefix",
    "BranchStats",
    "CorrelationResult",
    "NodeLimitExceeded",
    "enumerate_branches",
    "exhaustive_branch_stats",
    "enumerate_subtree",
    "correlation_study",
    "branches_csv",
]


class NodeLimitExceeded(RuntimeError):
    pass


class BranchPrefix(NamedTuple):
    first: ActionId
    second: ActionId


@dataclass(frozen=True)
class BranchStats:
    prefix: BranchPrefix
    min_makespan: int
    mean_makespan: float
    leaf_count: int
    makespan_sum: int


@dataclass(frozen=True)
class CorrelationResult:
    r: float | None
    branches: int
    optimum: int
    leaves: int
    stats: tuple[BranchStats, ...]
    method: str = "pearson"


def enumerate_branches(inst: Instance) -> list[BranchPrefix]:
    if inst.operation_count < 2:
        raise ValueError("branches need an instance with at least two operations")
    root = ScheduleState(inst)
    out = []
    for first in root.legal():
        s = root.copy()
        s.play(first)
        out.extend(BranchPrefix(first, second) for second in s.legal())
    return out


def enumerate_subtree(state: ScheduleState, node_limit: float = math.inf) -> tuple[int, int, int]:
    """``(leaves, min makespan, makespan sum)`` over every completion of ``state``."""
    leaves = 0
    best = math.inf
    total = 0
    nodes = 0
    stack = [state]
    while stack:
        s = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(
                f"more than {node_limit:g} nodes; reduce the instance (see the reduce command)"
            )
        if not s.remaining:
            leaves += 1
            total += s.makespan_so_far
            if s.makespan_so_far < best:
                best = s.makespan_so_far
            continue
        for a in s.legal():
            c = s.copy()
            c.play(a)
            stack.append(c)
    return leaves, best, total


def exhaustive_branch_stats(inst: Instance, prefix: BranchPrefix, node_limit: float = 1e8) -> BranchStats:
    s = ScheduleState(inst)
    s.play(prefix.first)
    s.play(prefix.second)
    leaves, best, total = enumerate_subtree(s, node_limit)
    return BranchStats(prefix, int(best), total / leaves, leaves, total)


def correlation_study(inst: Instance, node_limit: float = 1e8, method: str = "pearson") -> CorrelationResult:
    """Correlate per-branch min and mean makespans.

    ``node_limit`` applies to each branch separately. ``r`` is None when it
    is undefined (fewer than two branches or zero variance).
    """
    from .bench import pearson, spearman

    if method not in ("pearson", "spearman"):
        raise ValueError(f"unknown correlation method {method!r}")
    stats = tuple(exhaustive_branch_stats(inst, p, node_limit) for p in enumerate_branches(inst))
    mins = [b.min_makespan for b in stats]
    means = [b.mean_makespan for b in stats]
    try:
        r = (pearson if method == "pearson" else spearman)(mins, means)
    except ValueError:
        r = None
    return CorrelationResult(r, len(stats), min(mins), sum(b.leaf_count for b in stats), stats, method)


def _fmt_action(a: ActionId) -> str:
    return f"{a.job}:{a.op}:{a.machine + 1}"


def branches_csv(stats: Sequence[BranchStats]) -> str:
    """CSV ``first,second,min,mean,leaves``; actions are written ``job:op:machine`` with 1-based machines."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["first", "second", "min", "mean", "leaves"])
    for b in stats:
        w.writerow([_fmt_action(b.prefix.first), _fmt_action(b.prefix.second), b.min_makespan,
                    repr(b.mean_makespan), b.leaf_count])
    return buf.getvalue()
