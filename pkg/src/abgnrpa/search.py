"""Monte Carlo search algorithms for the FJSSP.

All algorithms share one budget object that is checked between playouts,
so a run stops after a wall-clock deadline, a playout count, or a target
makespan, whichever comes first. With a playout budget and a fixed seed a
run is fully reproducible.

Typical use::

    cfg = RunConfig(AlgoKind.ABGNRPA, budget_seconds=10, seed=1)
    res = run_algorithm(inst, cfg)
    res.best.makespan
"""

from __future__ import annotations

import enum
import logging
import math
import random
import time
from dataclasses import dataclass, field

from .heuristics import BiasNorm, BiasTable, HeuristicKind, ensure_initialized, state_biases
from .instance import ActionId, Instance
from .policy import BiasMode, PolicyTable, SamplerParams, adapt, sample_logits, seed_weights
from .schedule import ScheduleState, Trajectory, two_opt_improve

__all__ = [
    "AlgoKind",
    "TwoOptMode",
    "RunConfig",
    "RunResult",
    "Budget",
    "uniform_playout",
    "heuristic_playout",
    "policy_playout",
    "biased_policy_playout",
    "rand_greedy",
    "uct_search",
    "nested_mc",
    "nrpa_family",
    "run_algorithm",
]

log = logging.getLogger(__name__)


class AlgoKind(str, enum.Enum):
    RANDGREEDY = "RandGreedy"
    MCTS = "MCTS"
    NMCTS = "NMCTS"
    HBNMCTS = "HBNMCTS"
    NRPA = "NRPA"
    BINRPA = "BINRPA"
    GNRPA = "GNRPA"
    ABGNRPA = "ABGNRPA"

    @classmethod
    def parse(cls, value: str | AlgoKind) -> AlgoKind:
        if isinstance(value, cls):
            return value
        for k in cls:
            if k.value.lower() == value.lower():
                return k
        raise ValueError(f"unknown algorithm {value!r}; choose from {', '.join(k.value for k in cls)}")


class TwoOptMode(str, enum.Enum):
    OFF = "off"
    PER_RUN = "per_run"
    PER_PLAYOUT = "per_playout"


@dataclass(frozen=True)
class RunConfig:
    algo: AlgoKind
    budget_seconds: float | None = None
    budget_playouts: int | None = None
    level: int = 1
    nested_iterations: int = 100
    params: SamplerParams = field(default_factory=SamplerParams)
    heuristic: HeuristicKind = HeuristicKind.EET
    bias_norm: BiasNorm = BiasNorm.MEAN
    seed: int = 0
    two_opt: TwoOptMode = TwoOptMode.OFF
    two_opt_seconds: float | None = None
    # stop as soon as the incumbent reaches this makespan
    target: int | None = None
    correlation: bool = False
    # keep the adaptive bias table across top-level restarts
    keep_bias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "algo", AlgoKind.parse(self.algo))
        object.__setattr__(self, "heuristic", HeuristicKind.parse(self.heuristic))
        object.__setattr__(self, "bias_norm", BiasNorm(self.bias_norm))
        object.__setattr__(self, "two_opt", TwoOptMode(self.two_opt))
        if self.budget_seconds is None and self.budget_playouts is None:
            raise ValueError("a time or playout budget is required")
        if self.budget_seconds is not None and not self.budget_seconds > 0:
            raise ValueError("budget_seconds must be positive")
        if self.budget_playouts is not None and self.budget_playouts < 1:
            raise ValueError("budget_playouts must be >= 1")
        if self.level not in (1, 2):
            raise ValueError("only nesting levels 1 and 2 are supported")
        if self.nested_iterations < 1:
            raise ValueError("nested_iterations must be >= 1")


@dataclass
class RunResult:
    best: Trajectory
    playout_count: int
    elapsed: float
    bias_deviation_pct: float | None = None
    policy_bias_correlation: float | None = None
    improvements: list[tuple[int, int]] = field(default_factory=list)
    policy: PolicyTable | None = None
    bias: BiasTable | None = None


class Budget:
    """Playout counter, deadline and incumbent tracker shared by one run."""

    def __init__(self, seconds: float | None = None, playouts: int | None = None,
                 target: int | None = None):
        self.start = time.perf_counter()
        self.deadline = None if seconds is None else self.start + seconds
        self.max_playouts = playouts
        self.target = target
        self.playouts = 0
        self.best: Trajectory | None = None
        self.improvements: list[tuple[int, int]] = []

    def exhausted(self) -> bool:
        if self.max_playouts is not None and self.playouts >= self.max_playouts:
            return True
        if self.target is not None and self.best is not None and self.best.makespan <= self.target:
            return True
        return self.deadline is not None and time.perf_counter() >= self.deadline

    def record(self, traj: Trajectory) -> None:
        """Count one playout and keep it if strictly better than the incumbent."""
        self.playouts += 1
        if self.best is None or traj.makespan < self.best.makespan:
            self.best = traj
            self.improvements.append((self.playouts, traj.makespan))

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


# -- playouts ----------------------------------------------------------------
# Each playout completes the given state in place and returns its trajectory.


def uniform_playout(state: ScheduleState, rng: random.Random) -> Trajectory:
    while state.remaining:
        legal = state.legal()
        state.play(legal[rng.randrange(len(legal))] if len(legal) > 1 else legal[0])
    return Trajectory(tuple(state.actions), state.makespan_so_far)


def heuristic_playout(state: ScheduleState, kind: HeuristicKind, rng: random.Random,
                      norm: BiasNorm = BiasNorm.MEAN) -> Trajectory:
    """Sample every step from the softmax of the heuristic biases alone."""
    while state.remaining:
        legal = state.legal()
        if len(legal) == 1:
            state.play(legal[0])
            continue
        state.play(legal[sample_logits(state_biases(kind, state, legal, norm), rng)])
    return Trajectory(tuple(state.actions), state.makespan_so_far)


def policy_playout(state: ScheduleState, policy: PolicyTable, tau: float, rng: random.Random,
                   bias_mode: str = BiasMode.NONE, heuristic: HeuristicKind = HeuristicKind.EET,
                   norm: BiasNorm = BiasNorm.MEAN) -> Trajectory:
    """Softmax playout over policy weights, optionally plus per-state heuristic biases."""
    get = policy.get
    while state.remaining:
        legal = state.legal()
        if bias_mode == BiasMode.SEED:
            seed_weights(policy, heuristic, state, legal, norm)
        if len(legal) == 1:
            state.play(legal[0])
            continue
        if bias_mode == BiasMode.RECOMPUTE:
            betas = state_biases(heuristic, state, legal, norm)
            logits = [get(a, 0.0) / tau + b for a, b in zip(legal, betas)]
        else:
            logits = [get(a, 0.0) / tau for a in legal]
        state.play(legal[sample_logits(logits, rng)])
    return Trajectory(tuple(state.actions), state.makespan_so_far)


def biased_policy_playout(state: ScheduleState, policy: PolicyTable, bias: BiasTable,
                          params: SamplerParams, adapt_bias: bool, rng: random.Random,
                          heuristic: HeuristicKind = HeuristicKind.EET,
                          norm: BiasNorm = BiasNorm.MEAN) -> Trajectory:
    """Playout with a persistent bias table that is adapted after every move.

    After each sampled move is played, the lower bound of the new state
    drives ``update_bias`` over the pre-move legal set: ``+gamma*lb`` for
    the move, ``-gamma*lb/n`` for each of the other actions.
    """
    get = policy.get
    beta = bias.beta
    tau, gamma = params.tau, params.gamma
    while state.remaining:
        legal = state.legal()
        ensure_initialized(bias, heuristic, state, legal, norm)
        if len(legal) == 1:
            move = legal[0]
        else:
            logits = [get(a, 0.0) / tau + beta[a] for a in legal]
            move = legal[sample_logits(logits, rng)]
        state.play(move)
        if adapt_bias and gamma:
            up = gamma * state.lower_bound()
            down = -up / len(legal)
            for a in legal:
                beta[a] += up if a == move else down
    return Trajectory(tuple(state.actions), state.makespan_so_far)


# -- algorithms -------------------------------------------------------------


def _finish(inst: Instance, traj: Trajectory, cfg: RunConfig | None, start: int = 0) -> Trajectory:
    # ``start`` protects a prefix the caller has already committed to
    if cfg is not None and cfg.two_opt is TwoOptMode.PER_PLAYOUT:
        return two_opt_improve(inst, traj, start=start)
    return traj


def rand_greedy(inst: Instance, heuristic: HeuristicKind, rng: random.Random,
                norm: BiasNorm = BiasNorm.MEAN) -> Trajectory:
    """One heuristic-weighted random playout."""
    return heuristic_playout(ScheduleState(inst), heuristic, rng, norm)


def _rand_greedy_loop(inst: Instance, cfg: RunConfig, budget: Budget, rng: random.Random) -> None:
    while budget.best is None or not budget.exhausted():
        budget.record(_finish(inst, rand_greedy(inst, cfg.heuristic, rng, cfg.bias_norm), cfg))


class _Node:
    __slots__ = ("children", "untried", "visits", "total")

    def __init__(self, legal: list[ActionId]):
        self.children: dict[ActionId, _Node] = {}
        self.untried = legal
        self.visits = 0
        self.total = 0.0  # sum of rollout makespans through this node


def uct_search(inst: Instance, cfg: RunConfig, rng: random.Random, budget: Budget | None = None,
               c: float = math.sqrt(2.0)) -> Trajectory:
    """UCT with uniform rollouts; node values are mean makespans rescaled to [0, 1].

    The rescaling uses the best and worst makespans seen so far, so
    ``(worst - mean) / (worst - best)`` is the reward fed to UCB1.
    """
    if budget is None:
        budget = Budget(cfg.budget_seconds, cfg.budget_playouts, cfg.target)
    root_state = ScheduleState(inst)
    root = _Node(root_state.legal())
    worst = -math.inf
    best = math.inf
    while budget.best is None or not budget.exhausted():
        state = root_state.copy()
        node = root
        path = [node]
        while not node.untried and node.children:
            log_n = math.log(node.visits)
            span = worst - best
            chosen = None
            chosen_score = -math.inf
            for a, ch in node.children.items():
                if span > 0:
                    q = (worst - ch.total / ch.visits) / span
                else:
                    q = 0.5
                score = q + c * math.sqrt(log_n / ch.visits)
                if score > chosen_score:
                    chosen, chosen_score = a, score
            state.play(chosen)
            node = node.children[chosen]
            path.append(node)
        if node.untried:
            a = node.untried.pop(rng.randrange(len(node.untried)))
            state.play(a)
            child = _Node(state.legal())
            node.children[a] = child
            path.append(child)
        fixed = len(state.actions)
        traj = _finish(inst, uniform_playout(state, rng), cfg, fixed)
        ms = traj.makespan
        worst = max(worst, ms)
        best = min(best, ms)
        for n in path:
            n.visits += 1
            n.total += ms
        budget.record(traj)
    return budget.best


def nested_mc(inst: Instance, level: int, biased: bool, heuristic: HeuristicKind,
              budget: Budget, rng: random.Random, norm: BiasNorm = BiasNorm.MEAN,
              cfg: RunConfig | None = None) -> Trajectory:
    """Nested Monte Carlo search restarted from the root until the budget ends.

    Level 0 is a uniform (or heuristic-biased) playout. At level k every
    legal move is tried with a level k-1 search below it; the search then
    follows the best sequence found so far, breaking ties in favour of the
    first move tried.
    """
    if level < 1:
        raise ValueError("level must be >= 1")

    def nmcs(state: ScheduleState, lvl: int) -> Trajectory | None:
        if lvl == 0:
            fixed = len(state.actions)
            if biased:
                traj = heuristic_playout(state, heuristic, rng, norm)
            else:
                traj = uniform_playout(state, rng)
            traj = _finish(inst, traj, cfg, fixed)
            budget.record(traj)
            return traj
        best: Trajectory | None = None
        while state.remaining:
            for a in state.legal():
                if best is not None and budget.exhausted():
                    return best
                child = state.copy()
                child.play(a)
                traj = nmcs(child, lvl - 1)
                if traj is not None and (best is None or traj.makespan < best.makespan):
                    best = traj
            state.play(best.actions[len(state.actions)])
        if best is None:
            best = Trajectory(tuple(state.actions), state.makespan_so_far)
        return best

    while budget.best is None or not budget.exhausted():
        nmcs(ScheduleState(inst), level)
    return budget.best


class _NRPA:
    """Level-1 and level-2 nested rollout policy adaptation, with its bias variants."""

    def __init__(self, inst: Instance, cfg: RunConfig, budget: Budget, rng: random.Random):
        self.inst = inst
        self.cfg = cfg
        self.budget = budget
        self.rng = rng
        self.params = cfg.params
        algo = cfg.algo
        self.mode = {
            AlgoKind.NRPA: BiasMode.NONE,
            AlgoKind.BINRPA: BiasMode.SEED,
            AlgoKind.GNRPA: BiasMode.RECOMPUTE,
            AlgoKind.ABGNRPA: BiasMode.TABLE,
        }[algo]
        self.last_bias: BiasTable | None = None

    def playout(self, policy: PolicyTable, bias: BiasTable | None) -> Trajectory:
        cfg = self.cfg
        state = ScheduleState(self.inst)
        if self.mode == BiasMode.TABLE:
            traj = biased_policy_playout(state, policy, bias, self.params, True, self.rng,
                                         cfg.heuristic, cfg.bias_norm)
        else:
            traj = policy_playout(state, policy, self.params.tau, self.rng, self.mode,
                                  cfg.heuristic, cfg.bias_norm)
        traj = _finish(self.inst, traj, cfg)
        self.budget.record(traj)
        return traj

    def adapt(self, policy: PolicyTable, best: Trajectory, bias: BiasTable | None) -> PolicyTable:
        cfg = self.cfg
        return adapt(policy, self.inst, best, self.params, self.mode, bias, cfg.heuristic, cfg.bias_norm)

    def search(self, level: int, policy: PolicyTable, bias: BiasTable | None) -> Trajectory | None:
        """``nested_iterations`` rounds of: search one level down, keep the best, adapt."""
        best = None
        for _ in range(self.cfg.nested_iterations):
            if self.budget.best is not None and self.budget.exhausted():
                break
            if level == 1:
                traj = self.playout(policy, bias)
            else:
                # lower levels work on copies that are dropped on return
                traj = self.search(level - 1, policy.copy(), None if bias is None else bias.copy())
            if traj is not None and (best is None or traj.makespan < best.makespan):
                best = traj
            if best is not None:
                policy = self.adapt(policy, best, bias)
        if level == 1:
            self.last_bias = bias
        self.last_policy = policy
        return best

    def run(self) -> tuple[PolicyTable, BiasTable | None]:
        # the top level restarts from a uniform policy until the budget is spent
        bias = BiasTable() if self.mode == BiasMode.TABLE else None
        self.last_policy = PolicyTable()
        while self.budget.best is None or not self.budget.exhausted():
            if bias is not None and not self.cfg.keep_bias:
                bias = BiasTable()
            self.search(self.cfg.level, PolicyTable(), bias)
        return self.last_policy, self.last_bias


def nrpa_family(inst: Instance, cfg: RunConfig, rng: random.Random,
                budget: Budget | None = None) -> tuple[Trajectory, PolicyTable, BiasTable | None]:
    if budget is None:
        budget = Budget(cfg.budget_seconds, cfg.budget_playouts, cfg.target)
    if cfg.algo not in (AlgoKind.NRPA, AlgoKind.BINRPA, AlgoKind.GNRPA, AlgoKind.ABGNRPA):
        raise ValueError(f"{cfg.algo.value} is not a rollout policy adaptation algorithm")
    policy, bias = _NRPA(inst, cfg, budget, rng).run()
    return budget.best, policy, bias


def _pearson(xs, ys):
    from .bench import pearson

    try:
        return pearson(xs, ys)
    except ValueError:
        return None


def run_algorithm(inst: Instance, cfg: RunConfig) -> RunResult:
    """Run ``cfg.algo`` on ``inst`` under the configured budget."""
    rng = random.Random(cfg.seed)
    budget = Budget(cfg.budget_seconds, cfg.budget_playouts, cfg.target)
    policy = bias = None
    algo = cfg.algo
    if algo is AlgoKind.RANDGREEDY:
        _rand_greedy_loop(inst, cfg, budget, rng)
    elif algo is AlgoKind.MCTS:
        uct_search(inst, cfg, rng, budget)
    elif algo in (AlgoKind.NMCTS, AlgoKind.HBNMCTS):
        nested_mc(inst, cfg.level, algo is AlgoKind.HBNMCTS, cfg.heuristic, budget, rng,
                  cfg.bias_norm, cfg)
    else:
        _, policy, bias = nrpa_family(inst, cfg, rng, budget)
    best = budget.best
    if cfg.two_opt is TwoOptMode.PER_RUN:
        deadline = None if cfg.two_opt_seconds is None else time.perf_counter() + cfg.two_opt_seconds
        improved = two_opt_improve(inst, best, deadline)
        if improved.makespan < best.makespan:
            best = improved
            budget.improvements.append((budget.playouts, best.makespan))
    res = RunResult(best=best, playout_count=budget.playouts, elapsed=budget.elapsed(),
                    improvements=budget.improvements, policy=policy, bias=bias)
    if bias is not None:
        res.bias_deviation_pct = bias.deviation_pct()
        if cfg.correlation and policy is not None:
            keys = [a for a in bias.beta if a in policy]
            res.policy_bias_correlation = _pearson([policy[a] for a in keys], [bias.beta[a] for a in keys])
    return res

