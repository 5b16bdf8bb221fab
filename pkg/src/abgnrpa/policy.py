"""Softmax playout policy, its adaptation step and the adaptive bias update.

>>> import math
>>> from abgnrpa.instance import ActionId
>>> a, b = ActionId(0, 0, 0), ActionId(1, 0, 0)
>>> pol = PolicyTable({a: math.log(2)})
>>> [round(p, 12) for p in action_probabilities(pol, None, [a, b], 1.0)]
[0.666666666667, 0.333333333333]
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .heuristics import BiasNorm, BiasTable, HeuristicKind, ensure_initialized, state_biases
from .instance import ActionId, Instance
from .schedule import IllegalActionError, ScheduleState, Trajectory

__all__ = [
    "PolicyTable",
    "SamplerParams",
    "BiasMode",
    "softmax",
    "action_probabilities",
    "sample_action",
    "sample_index",
    "sample_logits",
    "adapt",
    "seed_weights",
    "update_bias",
]


class PolicyTable(dict):
    """Action weights; a missing action reads as 0."""

    def __missing__(self, key: ActionId) -> float:
        return 0.0

    def copy(self) -> PolicyTable:
        return PolicyTable(self)


@dataclass(frozen=True)
class SamplerParams:
    tau: float = 1.0
    alpha: float = 1.0
    gamma: float = 1e-5

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be nonnegative")


class BiasMode:
    NONE = "none"
    # no bias in the softmax; unseen actions get their heuristic bias as weight
    SEED = "seed"
    RECOMPUTE = "recompute"
    TABLE = "table"


def softmax(logits: Sequence[float]) -> list[float]:
    top = max(logits)
    ex = [math.exp(x - top) for x in logits]
    z = sum(ex)
    return [e / z for e in ex]


def action_probabilities(policy: PolicyTable, bias: BiasTable | dict | Sequence[float] | None,
                         legal: Sequence[ActionId], tau: float) -> list[float]:
    """``exp(w/tau + beta)`` normalized over ``legal``.

    ``bias`` may be a table keyed by action, a list aligned with ``legal`` or
    None for zero bias. Returns probabilities aligned with ``legal``.
    """
    if bias is None:
        logits = [policy.get(a, 0.0) / tau for a in legal]
    elif isinstance(bias, (BiasTable, dict)):
        logits = [policy.get(a, 0.0) / tau + bias[a] for a in legal]
    else:
        logits = [policy.get(a, 0.0) / tau + b for a, b in zip(legal, bias)]
    return softmax(logits)


def sample_index(probs: Sequence[float], rng: random.Random) -> int:
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            return i
    # rounding left r above the final cumulative sum
    for i in range(len(probs) - 1, -1, -1):
        if probs[i] > 0:
            return i
    raise ValueError("empty distribution")


def sample_logits(logits: Sequence[float], rng: random.Random) -> int:
    """Draw an index from ``softmax(logits)`` without building the distribution."""
    top = max(logits)
    ex = [math.exp(x - top) for x in logits]
    r = rng.random() * sum(ex)
    acc = 0.0
    for i, e in enumerate(ex):
        acc += e
        if r < acc:
            return i
    return ex.index(1.0)


def sample_action(legal: Sequence[ActionId], probs: Sequence[float], rng: random.Random) -> ActionId:
    return legal[sample_index(probs, rng)]


def adapt(policy: PolicyTable, inst: Instance, best: Trajectory, params: SamplerParams,
          bias_mode: str = BiasMode.NONE, bias: BiasTable | None = None,
          heuristic: HeuristicKind = HeuristicKind.EET,
          norm: BiasNorm | str = BiasNorm.LITERAL) -> PolicyTable:
    """Move the policy toward ``best``; returns a new table.

    Walks ``best`` from the initial state. At each step the probabilities
    are taken from the weights as they were before the step, then every
    legal action moves by ``-alpha * (p - [chosen]) / tau``.
    """
    new = policy.copy()
    tau, alpha = params.tau, params.alpha
    state = ScheduleState(inst)
    for i, move in enumerate(best.actions):
        legal = state.legal()
        if bias_mode == BiasMode.NONE:
            logits = [policy.get(a, 0.0) / tau for a in legal]
        elif bias_mode == BiasMode.SEED:
            seed_weights(policy, heuristic, state, legal, norm)
            seed_weights(new, heuristic, state, legal, norm)
            logits = [policy[a] / tau for a in legal]
        elif bias_mode == BiasMode.RECOMPUTE:
            betas = state_biases(heuristic, state, legal, norm)
            logits = [policy.get(a, 0.0) / tau + b for a, b in zip(legal, betas)]
        elif bias_mode == BiasMode.TABLE:
            ensure_initialized(bias, heuristic, state, legal, norm)
            beta = bias.beta
            logits = [policy.get(a, 0.0) / tau + beta[a] for a in legal]
        else:
            raise ValueError(f"unknown bias mode {bias_mode!r}")
        probs = softmax(logits)
        found = False
        for a, p in zip(legal, probs):
            if a == move:
                found = True
                new[a] = new.get(a, 0.0) - alpha * (p - 1.0) / tau
            else:
                new[a] = new.get(a, 0.0) - alpha * p / tau
        if not found:
            raise IllegalActionError(f"{move} is not legal", index=i)
        state.play(move)
    return new


def seed_weights(policy: PolicyTable, heuristic: HeuristicKind, state: ScheduleState,
                 legal: Sequence[ActionId], norm: BiasNorm | str = BiasNorm.LITERAL) -> None:
    """Set the weight of every action of ``legal`` absent from ``policy`` to its bias."""
    for a in legal:
        if a not in policy:
            break
    else:
        return
    for a, b in zip(legal, state_biases(heuristic, state, legal, norm)):
        if a not in policy:
            policy[a] = b


def update_bias(bias: BiasTable, legal: Sequence[ActionId], chosen: ActionId, lb: float,
                gamma: float) -> BiasTable:
    """Additive bias step: chosen gets ``+gamma*lb``, the others ``-gamma*lb/len(legal)``."""
    beta = bias.beta
    if chosen not in legal:
        raise IllegalActionError(f"{chosen} not in the legal set")
    for a in legal:
        if a not in beta:
            raise KeyError(f"bias of {a} updated before initialization")
    if gamma == 0:
        return bias
    up = gamma * lb
    down = -gamma * lb / len(legal)
    for a in legal:
        beta[a] += up if a == chosen else down
    return bias
