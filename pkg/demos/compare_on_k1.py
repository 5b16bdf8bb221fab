"""Every algorithm on the 4x5 Kacem instance under the same playout budget.

The budget is a playout count rather than seconds, so the printed table
is the same on every machine. The best ABGNRPA schedule is drawn as a
text Gantt chart at the end.

    python3 demos/compare_on_k1.py
"""

import statistics

from abgnrpa import AlgoKind, RunConfig, run_algorithm
from abgnrpa.instance import find_instance, read_instance
from abgnrpa.schedule import replay

PLAYOUTS = 2000
SEEDS = range(5)

inst = read_instance(find_instance("kacem", "k1"), dataset="kacem")
print(f"{inst.name}: {inst.job_count} jobs, {inst.machine_count} machines, "
      f"{inst.operation_count} operations, best known makespan 11\n")
print(f"{'algorithm':<11} {'min':>4} {'mean':>6}  playouts/s")

best = None
for algo in AlgoKind:
    results = [run_algorithm(inst, RunConfig(algo, budget_playouts=PLAYOUTS, seed=s)) for s in SEEDS]
    ms = [r.best.makespan for r in results]
    rate = sum(r.playout_count for r in results) / sum(r.elapsed for r in results)
    print(f"{algo.value:<11} {min(ms):>4} {statistics.fmean(ms):>6.1f}  {rate:>9.0f}")
    if algo is AlgoKind.ABGNRPA:
        best = min(results, key=lambda r: r.best.makespan).best

# one row per machine, one character per time unit, job number as the glyph
state = replay(inst, best.actions)
print(f"\nABGNRPA schedule, makespan {best.makespan}")
for m in range(inst.machine_count):
    row = ["."] * best.makespan
    for h in state.history:
        if h.action.machine == m:
            row[h.start:h.end] = str(h.action.job + 1) * (h.end - h.start)
    print(f"M{m + 1} {''.join(row)}")
