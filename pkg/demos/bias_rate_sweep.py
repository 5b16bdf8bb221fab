"""Sweep the bias learning rate of ABGNRPA.

With gamma = 0 the bias table never moves and ABGNRPA behaves like GNRPA
with biases frozen at first sight. Larger rates pull the table further
from its initial values; the deviation column shows by how much.

    python3 demos/bias_rate_sweep.py
"""

import statistics

from abgnrpa import AlgoKind, RunConfig, SamplerParams, run_algorithm
from abgnrpa.instance import find_instance, read_instance

inst = read_instance(find_instance("synthetic", "syn_10x6"))
print(f"{inst.name}: {inst.job_count} jobs, {inst.operation_count} operations, 1500 playouts per run\n")
print(f"{'gamma':>8} {'mean':>6} {'min':>4} {'deviation %':>12}")
for gamma in (0.0, 1e-6, 1e-5, 1e-4, 1e-3):
    runs = [run_algorithm(inst, RunConfig(AlgoKind.ABGNRPA, budget_playouts=1500, seed=s,
                                          params=SamplerParams(gamma=gamma)))
            for s in range(4)]
    ms = [r.best.makespan for r in runs]
    dev = statistics.fmean(r.bias_deviation_pct for r in runs)
    print(f"{gamma:>8g} {statistics.fmean(ms):>6.1f} {min(ms):>4} {dev:>12.4f}")
