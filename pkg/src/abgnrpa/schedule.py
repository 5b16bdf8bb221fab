"""Sequential construction of semi-active schedules.

A schedule is built one action at a time. Each action picks the next
unscheduled operation of some job and a compatible machine; the operation
starts as soon as both the machine and the job are free.

>>> from abgnrpa.instance import parse_instance
>>> inst = parse_instance("2 2\\n1 2 1 3 2 5\\n1 1 2 4\\n")
>>> s = initial_state(inst)
>>> legal_actions(s)
[ActionId(job=0, op=0, machine=0), ActionId(job=0, op=0, machine=1), ActionId(job=1, op=0, machine=1)]
>>> s = apply_action(apply_action(s, ActionId(0, 0, 1)), ActionId(1, 0, 1))
>>> s.makespan_so_far, is_terminal(s)
(9, True)
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .instance import ActionId, Instance

__all__ = [
    "ActionId",
    "ScheduledOp",
    "ScheduleState",
    "Trajectory",
    "IllegalActionError",
    "initial_state",
    "legal_actions",
    "earliest_start_time",
    "apply_action",
    "is_terminal",
    "lower_bound",
    "replay",
    "two_opt_improve",
    "check_history",
    "gantt_csv",
]


class IllegalActionError(ValueError):
    """An action was applied to a state in which it is not legal."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"step {index}: {message}"
        super().__init__(message)
        self.index = index


class ScheduledOp(NamedTuple):
    action: ActionId
    start: int
    end: int


class ScheduleState:
    """Partial schedule of one instance.

    ``play`` mutates in place and is what the search loops use; the
    module-level :func:`apply_action` returns a fresh copy instead.
    """

    __slots__ = ("inst", "machine_free_at", "job_free_at", "next_op", "actions", "starts",
                 "makespan_so_far", "remaining")

    def __init__(self, inst: Instance):
        self.inst = inst
        self.machine_free_at = [0] * inst.machine_count
        self.job_free_at = [0] * inst.job_count
        self.next_op = [0] * inst.job_count
        self.actions: list[ActionId] = []
        self.starts: list[int] = []
        self.makespan_so_far = 0
        self.remaining = inst.operation_count

    def copy(self) -> ScheduleState:
        new = ScheduleState.__new__(ScheduleState)
        new.inst = self.inst
        new.machine_free_at = self.machine_free_at[:]
        new.job_free_at = self.job_free_at[:]
        new.next_op = self.next_op[:]
        new.actions = self.actions[:]
        new.starts = self.starts[:]
        new.makespan_so_far = self.makespan_so_far
        new.remaining = self.remaining
        return new

    def legal(self) -> list[ActionId]:
        table = self.inst.action_table
        lengths = self.inst.job_lengths
        out: list[ActionId] = []
        for j, k in enumerate(self.next_op):
            if k < lengths[j]:
                out.extend(table[j][k])
        return out

    def play(self, action: ActionId) -> int:
        """Schedule ``action`` in place and return its end time."""
        j, k, m = action
        if j < 0 or j >= len(self.next_op) or self.next_op[j] != k:
            raise IllegalActionError(f"{action} is not the next operation of its job")
        try:
            d = self.inst.durations[j][k][m]
        except (KeyError, IndexError):
            raise IllegalActionError(f"{action}: machine not compatible") from None
        start = self.machine_free_at[m]
        if self.job_free_at[j] > start:
            start = self.job_free_at[j]
        end = start + d
        self.machine_free_at[m] = end
        self.job_free_at[j] = end
        self.next_op[j] = k + 1
        self.actions.append(action)
        self.starts.append(start)
        if end > self.makespan_so_far:
            self.makespan_so_far = end
        self.remaining -= 1
        return end

    def earliest_start(self, action: ActionId) -> int:
        mf = self.machine_free_at[action[2]]
        jf = self.job_free_at[action[0]]
        return mf if mf > jf else jf

    def lower_bound(self) -> int:
        rem = self.inst.remaining_min_work
        tail = 0
        for j, k in enumerate(self.next_op):
            r = rem[j][k]
            if r > tail:
                tail = r
        return self.makespan_so_far + tail

    @property
    def terminal(self) -> bool:
        return self.remaining == 0

    @property
    def history(self) -> list[ScheduledOp]:
        dur = self.inst.durations
        return [
            ScheduledOp(a, s, s + dur[a.job][a.op][a.machine])
            for a, s in zip(self.actions, self.starts)
        ]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScheduleState):
            return NotImplemented
        return (
            self.inst is other.inst
            and self.actions == other.actions
            and self.starts == other.starts
            and self.machine_free_at == other.machine_free_at
            and self.job_free_at == other.job_free_at
        )

    def __repr__(self) -> str:
        return (f"ScheduleState(steps={len(self.actions)}, remaining={self.remaining}, "
                f"makespan={self.makespan_so_far})")


@dataclass(frozen=True)
class Trajectory:
    actions: tuple[ActionId, ...]
    makespan: int

    @classmethod
    def from_state(cls, state: ScheduleState) -> Trajectory:
        return cls(tuple(state.actions), state.makespan_so_far)

    def to_json(self) -> str:
        """``{"actions": [[job, op, machine], ...], "makespan": M}``; machines 1-based."""
        return json.dumps({"actions": [[a.job, a.op, a.machine + 1] for a in self.actions],
                           "makespan": self.makespan})

    @classmethod
    def from_json(cls, text: str) -> Trajectory:
        data = json.loads(text)
        actions = tuple(ActionId(int(j), int(k), int(m) - 1) for j, k, m in data["actions"])
        return cls(actions, int(data["makespan"]))

    def __len__(self) -> int:
        return len(self.actions)


def initial_state(inst: Instance) -> ScheduleState:
    return ScheduleState(inst)


def legal_actions(state: ScheduleState, inst: Instance | None = None) -> list[ActionId]:
    """Next operation of every unfinished job times each compatible machine.

    Ordered by job, then machine.
    """
    return state.legal()


def _check_legal(state: ScheduleState, action: ActionId) -> None:
    j, k, m = action
    if not 0 <= j < len(state.next_op) or state.next_op[j] != k:
        raise IllegalActionError(f"{action} is not the next operation of its job")
    if m not in state.inst.durations[j][k]:
        raise IllegalActionError(f"{action}: machine not compatible")


def earliest_start_time(state: ScheduleState, action: ActionId) -> int:
    _check_legal(state, action)
    return state.earliest_start(action)


def apply_action(state: ScheduleState, action: ActionId) -> ScheduleState:
    new = state.copy()
    new.play(action)
    return new


def is_terminal(state: ScheduleState, inst: Instance | None = None) -> bool:
    return state.remaining == 0


def lower_bound(state: ScheduleState, inst: Instance | None = None) -> int:
    """Current makespan plus the largest minimal remaining work of any job."""
    return state.lower_bound()


def replay(inst: Instance, actions: Iterable[ActionId]) -> ScheduleState:
    """Play ``actions`` from the initial state; the error names the first bad step."""
    state = ScheduleState(inst)
    for i, a in enumerate(actions):
        try:
            state.play(ActionId(*a))
        except IllegalActionError as exc:
            raise IllegalActionError(str(exc), index=i) from None
    return state


def check_history(inst: Instance, history: Sequence[ScheduledOp], complete: bool = True) -> list[str]:
    """Brute-force feasibility check of a schedule, independent of ScheduleState.

    Checks durations, pairwise machine overlap, per-job precedence and, if
    ``complete``, that every operation appears exactly once.
    """
    problems = []
    seen = {}
    for h in history:
        a = h.action
        key = (a.job, a.op)
        if key in seen:
            problems.append(f"operation {key} scheduled twice")
        seen[key] = h
        alts = {alt.machine: alt.duration for alt in inst.jobs[a.job].operations[a.op].alternatives}
        if a.machine not in alts:
            problems.append(f"{a}: machine not compatible")
        elif h.end - h.start != alts[a.machine]:
            problems.append(f"{a}: wrong duration")
        if h.start < 0:
            problems.append(f"{a}: negative start")
    for x in range(len(history)):
        for y in range(x + 1, len(history)):
            p, q = history[x], history[y]
            if p.action.machine == q.action.machine and p.start < q.end and q.start < p.end:
                problems.append(f"{p.action} and {q.action} overlap on machine {p.action.machine}")
    for (j, k), h in seen.items():
        if k > 0:
            prev = seen.get((j, k - 1))
            if prev is None:
                problems.append(f"job {j} op {k} scheduled before op {k - 1}")
            elif prev.end > h.start:
                problems.append(f"job {j} op {k} starts before op {k - 1} ends")
    if complete:
        for j, job in enumerate(inst.jobs):
            for k in range(len(job.operations)):
                if (j, k) not in seen:
                    problems.append(f"job {j} op {k} never scheduled")
    return problems


def gantt_csv(state: ScheduleState) -> str:
    """CSV ``machine,job,op,start,end`` with 1-based machines, sorted by machine and start."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["machine", "job", "op", "start", "end"])
    for h in sorted(state.history, key=lambda h: (h.action.machine, h.start)):
        w.writerow([h.action.machine + 1, h.action.job, h.action.op, h.start, h.end])
    return buf.getvalue()


def _transposable(seq: Sequence[ActionId], a: int, b: int) -> bool:
    # moving seq[b] to a and seq[a] to b keeps each job's ops in order
    ja, jb = seq[a].job, seq[b].job
    if ja == jb:
        return False
    for i in range(a + 1, b):
        j = seq[i].job
        if j == ja or j == jb:
            return False
    return True


def two_opt_improve(inst: Instance, traj: Trajectory, deadline: float | None = None,
                    start: int = 0) -> Trajectory:
    """First-improvement local search over transpositions of two sequence positions.

    ``deadline`` is an absolute ``time.perf_counter()`` value. Positions
    before ``start`` are left alone. The result is never worse than ``traj``.
    """
    seq = [ActionId(*a) for a in traj.actions]
    n = len(seq)
    best = replay(inst, seq).makespan_so_far
    improved = True
    while improved:
        improved = False
        prefix = [ScheduleState(inst)]
        for act in seq[:-1]:
            s = prefix[-1].copy()
            s.play(act)
            prefix.append(s)
        for a in range(start, n - 1):
            for b in range(a + 1, n):
                if deadline is not None and time.perf_counter() >= deadline:
                    return Trajectory(tuple(seq), best)
                if not _transposable(seq, a, b):
                    continue
                s = prefix[a].copy()
                cand = seq[:a] + [seq[b]] + seq[a + 1:b] + [seq[a]] + seq[b + 1:]
                for act in cand[a:]:
                    s.play(act)
                    if s.makespan_so_far >= best:
                        break
                else:
                    seq = cand
                    best = s.makespan_so_far
                    improved = True
                    break
            if improved:
                break
    return Trajectory(tuple(seq), best)
