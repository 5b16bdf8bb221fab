"""A miniature benchmark: journal, resume and report.

Runs three algorithms on two bundled instances, writes the records to an
ndjson journal, runs the suite again to show that finished runs are
skipped, and prints the markdown summary.

    python3 demos/small_benchmark.py [journal.ndjson]
"""

import sys
import tempfile
import time
from pathlib import Path

from abgnrpa.bench import SuiteConfig, aggregate, report, run_suite
from abgnrpa.instance import UBEntry, bundled_ub_table

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "results.ndjson"
suite = SuiteConfig(instances=[("kacem", "k1"), ("classic", "ft06")], algos=["NRPA", "GNRPA", "ABGNRPA"],
                    runs_per_pair=3, budget_playouts=800, base_seed=1)

t0 = time.perf_counter()
records = run_suite(suite, out)
print(f"{len(records)} runs in {time.perf_counter() - t0:.1f}s -> {out}")
t0 = time.perf_counter()
run_suite(suite, out)
print(f"second call found them all in the journal ({time.perf_counter() - t0:.2f}s)\n")

ub = bundled_ub_table()
ub[("classic", "ft06")] = UBEntry(55, True)  # proven optimum of the classic 6x6 instance
print(report(aggregate(records, ub), "markdown"))
