"""How much does the mean playout of a branch say about its best leaf?

A synthetic instance is cut down to a size whose tree can be enumerated.
Every branch (the first two decisions) is enumerated to the leaves, and the
branch minima are correlated with the branch means.

    python3 demos/relevance_study.py
"""

from abgnrpa.instance import find_instance, read_instance, reduce_instance
from abgnrpa.relevance import correlation_study

full = read_instance(find_instance("synthetic", "syn_6x4"))
inst = reduce_instance(full, jobs=3, ops_per_job=2)
print(f"reduced {full.name} to {inst.job_count} jobs x {max(inst.job_lengths)} operations")

for method in ("pearson", "spearman"):
    res = correlation_study(inst, method=method)
    print(f"{method:>8}: r = {res.r:.3f} over {res.branches} branches, {res.leaves} leaves, optimum {res.optimum}")

res = correlation_study(inst)
ranked = sorted(res.stats, key=lambda b: b.mean_makespan)
print("\nfive branches with the lowest mean")
for b in ranked[:5]:
    print(f"  min {b.min_makespan:>3}  mean {b.mean_makespan:6.2f}  leaves {b.leaf_count}")
print("five branches with the highest mean")
for b in ranked[-5:]:
    print(f"  min {b.min_makespan:>3}  mean {b.mean_makespan:6.2f}  leaves {b.leaf_count}")
