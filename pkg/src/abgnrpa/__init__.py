"""Monte Carlo search for the flexible job-shop scheduling problem.

Nested rollout policy adaptation with heuristic and adaptive biases, the
usual Monte Carlo baselines, and a benchmark harness around them.
"""

from .heuristics import BiasNorm, BiasTable, HeuristicKind
from .instance import ActionId, Instance, parse_instance, read_instance
from .policy import PolicyTable, SamplerParams
from .schedule import ScheduleState, Trajectory
from .search import AlgoKind, RunConfig, RunResult, run_algorithm

__version__ = "0.1.0"

__all__ = [
    "ActionId",
    "AlgoKind",
    "BiasNorm",
    "BiasTable",
    "HeuristicKind",
    "Instance",
    "PolicyTable",
    "RunConfig",
    "RunResult",
    "SamplerParams",
    "ScheduleState",
    "Trajectory",
    "parse_instance",
    "read_instance",
    "run_algorithm",
]
