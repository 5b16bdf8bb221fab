"""Command line entry point: ``python -m abgnrpa <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
from pathlib import Path

from . import bench, relevance
from .heuristics import BiasNorm, HeuristicKind
from .instance import (bundled_ub_table, find_instance, format_instance, load_ub_table, read_instance,
                       reduce_instance)
from .policy import SamplerParams
from .schedule import gantt_csv, replay
from .search import AlgoKind, RunConfig, TwoOptMode, run_algorithm

log = logging.getLogger("abgnrpa")


def _load(ref: str, dataset: str = ""):
    path = Path(ref)
    if not path.is_file() and "/" in ref:
        ds, name = ref.rsplit("/", 1)
        found = find_instance(ds, name)
        if found is not None:
            return read_instance(found, dataset=ds)
    if not path.is_file():
        raise SystemExit(f"error: instance {ref!r} not found (give a file path or dataset/name)")
    return read_instance(path, dataset=dataset)


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=1.0, help="softmax temperature (default 1)")
    p.add_argument("--alpha", type=float, default=1.0, help="policy learning rate (default 1)")
    p.add_argument("--gamma", type=float, default=1e-5, help="bias learning rate (default 1e-5)")
    p.add_argument("--heuristic", choices=[k.value for k in HeuristicKind], default="eet")
    p.add_argument("--bias-norm", choices=[k.value for k in BiasNorm], default=BiasNorm.MEAN.value)
    p.add_argument("--level", type=int, default=1, choices=(1, 2))
    p.add_argument("--nested-iterations", type=int, default=100,
                   help="iterations per nesting level before a restart (default 100)")
    p.add_argument("--two-opt", choices=[k.value for k in TwoOptMode], default="off")


def _dump_policy(path: str, res) -> None:
    keys = set(res.policy or ()) | set(res.bias.beta if res.bias is not None else ())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job", "op", "machine", "weight", "beta"])
        for a in sorted(keys):
            weight = res.policy.get(a, 0.0) if res.policy is not None else 0.0
            beta = res.bias.beta.get(a, "") if res.bias is not None else ""
            w.writerow([a.job, a.op, a.machine + 1, repr(weight), repr(beta) if beta != "" else ""])


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.budget_seconds is None and args.budget_playouts is None:
        args.budget_seconds = 60.0
    cfg = RunConfig(
        AlgoKind.parse(args.algo), budget_seconds=args.budget_seconds, budget_playouts=args.budget_playouts,
        level=args.level, nested_iterations=args.nested_iterations,
        params=SamplerParams(args.tau, args.alpha, args.gamma), heuristic=args.heuristic,
        bias_norm=args.bias_norm, seed=args.seed, two_opt=args.two_opt, target=args.target,
        correlation=args.correlation,
    )
    res = run_algorithm(inst, cfg)
    out = {
        "instance": inst.name,
        "algo": cfg.algo.value,
        "seed": cfg.seed,
        "makespan": res.best.makespan,
        "playouts": res.playout_count,
        "elapsed_s": round(res.elapsed, 3),
    }
    if res.bias_deviation_pct is not None:
        out["bias_deviation_pct"] = res.bias_deviation_pct
    if res.policy_bias_correlation is not None:
        out["policy_bias_correlation"] = res.policy_bias_correlation
    print(json.dumps(out))
    if args.dump_best:
        Path(args.dump_best).write_text(res.best.to_json() + "\n")
    if args.gantt:
        Path(args.gantt).write_text(gantt_csv(replay(inst, res.best.actions)))
    if args.dump_policy:
        _dump_policy(args.dump_policy, res)
    return 0


def cmd_bench(args) -> int:
    cfg = bench.load_suite(args.suite)
    if args.parallelism is not None:
        cfg.parallelism = args.parallelism
    records = bench.run_suite(cfg, args.out)
    print(f"{len(records)} records in {args.out}", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    records = bench.read_records(args.input)
    ub = load_ub_table(Path(args.ub).read_text()) if args.ub else bundled_ub_table()
    text = bench.report(bench.aggregate(records, ub), args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_relevance(args) -> int:
    inst = _load(args.instance)
    try:
        res = relevance.correlation_study(inst, args.node_limit, args.method)
    except relevance.NodeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_text = relevance.branches_csv(res.stats)
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(json.dumps({"instance": inst.name, "branches": res.branches, "leaves": res.leaves,
                      "optimum": res.optimum, "r": res.r, "method": res.method}), file=sys.stderr)
    return 0


def cmd_reduce(args) -> int:
    inst = reduce_instance(_load(args.instance), args.jobs, args.ops)
    text = "# reduced from {}: first {} jobs, first {} operations per job\n".format(
        args.instance, args.jobs, args.ops) + format_instance(inst)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_calibrate(args) -> int:
    inst = _load(args.instance)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "runs", "mean_makespan", "min_makespan", "mean_bias_deviation_pct"])
    for gamma in args.gammas:
        ms, devs = [], []
        for i in range(args.runs):
            cfg = RunConfig(AlgoKind.ABGNRPA, budget_seconds=args.budget_seconds,
                            budget_playouts=args.budget_playouts, params=SamplerParams(gamma=gamma),
                            heuristic=args.heuristic, bias_norm=args.bias_norm,
                            seed=bench.derive_seed(args.seed, inst.name, "calibrate", i))
            res = run_algorithm(inst, cfg)
            ms.append(res.best.makespan)
            devs.append(res.bias_deviation_pct)
        w.writerow([gamma, args.runs, statistics.fmean(ms), min(ms), statistics.fmean(devs)])
        sys.stdout.write(buf.getvalue())
        buf.seek(0)
        buf.truncate()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abgnrpa", description="FJSSP Monte Carlo search toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one algorithm on one instance")
    p.add_argument("--algo", required=True, choices=[k.value for k in AlgoKind],
                   type=lambda s: AlgoKind.parse(s).value)
    p.add_argument("--instance", required=True, help="instance file or dataset/name")
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--budget-playouts", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", type=int, help="stop once this makespan is reached")
    _add_sampler_args(p)
    p.add_argument("--correlation", action="store_true", help="report policy/bias correlation")
    p.add_argument("--dump-best", metavar="JSON")
    p.add_argument("--dump-policy", metavar="CSV")
    p.add_argument("--gantt", metavar="CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a suite and append records to a journal")
    p.add_argument("--suite", required=True, help="suite file (TOML or JSON)")
    p.add_argument("--out", required=True, help="results journal (ndjson)")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summarize a results journal")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ub", help="upper-bound CSV (default: bundled table)")
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("relevance", help="exhaustive per-branch statistics")
    p.add_argument("--instance", required=True)
    p.add_argument("--node-limit", type=float, default=1e8)
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--out")
    p.set_defaults(func=cmd_relevance)

    p = sub.add_parser("reduce", help="keep the first jobs and operations of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--jobs", type=int, required=True)
    p.add_argument("--ops", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("calibrate", help="sweep the bias learning rate and report bias deviation")
    p.add_argument("--instance", required=True)
    p.add_argument("--gammas", type=float, nargs="+", default=[1e-7, 1e-6, 1e-5, 1e-4, 1e-3])
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--budget-playouts", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--heuristic", choices=[k.value for k in HeuristicKind], default="eet")
    p.add_argument("--bias-norm", choices=[k.value for k in BiasNorm], default=BiasNorm.MEAN.value)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
