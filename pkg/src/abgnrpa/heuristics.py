"""Dispatching-rule scores used as softmax biases.

Every score is oriented so that larger means more preferred. Scores of one
legal set are turned into biases by :func:`normalize_scores`.

>>> normalize_scores([-3.0, -6.0])
[0.3333333333333333, 0.6666666666666666]
>>> normalize_scores([-3.0, -6.0], mode="magnitude")
[0.6666666666666667, 0.33333333333333337]
"""

from __future__ import annotations

import enum
import logging
from typing import Iterable, Sequence

from .instance import ActionId
from .schedule import ScheduleState

__all__ = [
    "HeuristicKind",
    "BiasNorm",
    "BiasTable",
    "raw_score",
    "normalize_scores",
    "state_biases",
    "ensure_initialized",
    "fallback_count",
]

log = logging.getLogger(__name__)


class HeuristicKind(str, enum.Enum):
    SPT = "spt"
    LPT = "lpt"
    LRPT = "lrpt"
    MRPT = "mrpt"
    EET = "eet"
    LET = "let"

    @classmethod
    def parse(cls, value: str | HeuristicKind) -> HeuristicKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown heuristic {value!r}; choose from "
                             f"{', '.join(k.value for k in cls)}") from None


class BiasNorm(str, enum.Enum):
    """How a legal set's raw scores become biases.

    ``literal`` divides by the signed sum. When all scores share a sign this
    makes the bias proportional to the score's magnitude, so for negative
    scores the least preferred action gets the largest bias. ``magnitude``
    divides by the absolute sum and shifts by one, which keeps the score
    order.
    """

    LITERAL = "literal"
    MAGNITUDE = "magnitude"
    MEAN = "mean"


_fallbacks = 0


def fallback_count() -> int:
    """Number of zero-sum normalizations replaced by a uniform bias so far."""
    return _fallbacks


def raw_score(kind: HeuristicKind, state: ScheduleState, action: ActionId) -> float:
    j, k, m = action
    inst = state.inst
    if state.next_op[j] != k or m not in inst.durations[j][k]:
        from .schedule import IllegalActionError

        raise IllegalActionError(f"{action} is not legal in this state")
    d = inst.durations[j][k][m]
    if kind is HeuristicKind.SPT:
        return -d
    if kind is HeuristicKind.LPT:
        return d
    if kind is HeuristicKind.LRPT:
        return -inst.remaining_min_work[j][k]
    if kind is HeuristicKind.MRPT:
        return inst.remaining_min_work[j][k]
    end = state.earliest_start(action) + d
    if kind is HeuristicKind.EET:
        return -end
    if kind is HeuristicKind.LET:
        return end
    raise ValueError(f"unknown heuristic {kind!r}")


def normalize_scores(raws: Sequence[float], mode: BiasNorm | str = BiasNorm.LITERAL) -> list[float]:
    global _fallbacks
    total = sum(raws)
    if total == 0:
        _fallbacks += 1
        return [1.0 / len(raws)] * len(raws)
    if mode == BiasNorm.MAGNITUDE:
        total = abs(total)
        return [1.0 + r / total for r in raws]
    if mode == BiasNorm.MEAN:
        scale = len(raws) / abs(total)
        return [r * scale for r in raws]
    return [r / total for r in raws]


def _raw_scores(kind: HeuristicKind, state: ScheduleState, legal: Sequence[ActionId]) -> list[float]:
    # inlined raw_score without legality checks; legal comes from state.legal()
    inst = state.inst
    dur = inst.durations
    if kind is HeuristicKind.EET or kind is HeuristicKind.LET:
        mf, jf = state.machine_free_at, state.job_free_at
        sign = -1 if kind is HeuristicKind.EET else 1
        out = []
        for j, k, m in legal:
            s = mf[m] if mf[m] > jf[j] else jf[j]
            out.append(sign * (s + dur[j][k][m]))
        return out
    if kind is HeuristicKind.SPT:
        return [-dur[j][k][m] for j, k, m in legal]
    if kind is HeuristicKind.LPT:
        return [dur[j][k][m] for j, k, m in legal]
    rem = inst.remaining_min_work
    sign = -1 if kind is HeuristicKind.LRPT else 1
    return [sign * rem[j][k] for j, k, _ in legal]


def state_biases(kind: HeuristicKind, state: ScheduleState, legal: Sequence[ActionId],
                 mode: BiasNorm | str = BiasNorm.LITERAL) -> list[float]:
    """Normalized biases of ``legal`` evaluated in ``state``."""
    return normalize_scores(_raw_scores(kind, state, legal), mode)


class BiasTable:
    """Per-action biases, set once at first encounter and then adapted in place."""

    __slots__ = ("beta", "initial")

    def __init__(self):
        self.beta: dict[ActionId, float] = {}
        self.initial: dict[ActionId, float] = {}

    @property
    def initialized(self) -> set[ActionId]:
        return set(self.initial)

    def __getitem__(self, action: ActionId) -> float:
        try:
            return self.beta[action]
        except KeyError:
            raise KeyError(f"bias of {action} read before initialization") from None

    def __contains__(self, action: ActionId) -> bool:
        return action in self.beta

    def __len__(self) -> int:
        return len(self.beta)

    def get(self, action: ActionId, default: float = 0.0) -> float:
        return self.beta.get(action, default)

    def copy(self) -> BiasTable:
        new = BiasTable()
        new.beta = dict(self.beta)
        new.initial = dict(self.initial)
        return new

    def deviation_pct(self, eps: float = 1e-12) -> float | None:
        """Mean relative change of every initialized bias, in percent."""
        if not self.initial:
            return None
        total = 0.0
        for a, b0 in self.initial.items():
            total += abs(self.beta[a] - b0) / max(abs(b0), eps)
        return 100.0 * total / len(self.initial)

    def items(self) -> Iterable[tuple[ActionId, float]]:
        return self.beta.items()


def ensure_initialized(bias: BiasTable, kind: HeuristicKind, state: ScheduleState,
                       legal: Sequence[ActionId], mode: BiasNorm | str = BiasNorm.LITERAL) -> BiasTable:
    """Give every action of ``legal`` not yet in ``bias`` its heuristic bias.

    The normalization runs over the whole current legal set; entries that
    already exist are left untouched.
    """
    beta = bias.beta
    for a in legal:
        if a not in beta:
            break
    else:
        return bias
    values = state_biases(kind, state, legal, mode)
    for a, v in zip(legal, values):
        if a not in beta:
            beta[a] = v
            bias.initial[a] = v
    return bias
