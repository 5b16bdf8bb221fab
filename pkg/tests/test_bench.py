import hashlib
import json
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abgnrpa.bench import (
    RunRecord,
    SuiteConfig,
    aggregate,
    derive_seed,
    load_suite,
    pearson,
    read_records,
    report,
    run_suite,
    spearman,
    summary_from_json,
)
from abgnrpa.instance import load_ub_table

import oracles


def rec(instance, algo, makespan, run=0, dataset="kacem"):
    return RunRecord(dataset, instance, algo, seed=run, makespan=makespan, elapsed_s=0.1, playouts=1,
                     run_index=run)


def test_pearson_examples():
    xs = [1.0, 2.0, 4.0, 7.0]
    assert pearson(xs, [2 * x + 1 for x in xs]) == pytest.approx(1.0, abs=1e-15)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [2])


@given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)), min_size=3, max_size=40))
def test_pearson_matches_independent_formulas(pairs):
    xs = [float(x) for x, _ in pairs]
    ys = [float(y) for _, y in pairs]
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    r = pearson(xs, ys)
    assert r == pytest.approx(oracles.textbook_pearson(xs, ys), abs=1e-12)
    assert r == pytest.approx(np.corrcoef(xs, ys)[0, 1], abs=1e-12)


def test_spearman_monotone():
    xs = [1, 2, 3, 4, 5]
    assert spearman(xs, [x**3 for x in xs]) == pytest.approx(1.0)


def test_seed_derivation_is_stable():
    a = derive_seed(7, "k1", "NRPA", 3)
    assert a == derive_seed(7, "k1", "NRPA", 3)
    assert a != derive_seed(7, "k1", "GNRPA", 3)
    assert derive_seed(0, "k1", "NRPA", 3) ^ 7 == a
    assert 0 <= a < 2**64
    digest = hashlib.blake2b(b"k1\x00ABGNRPA\x000", digest_size=8).digest()
    assert derive_seed(0, "k1", "ABGNRPA", 0) == int.from_bytes(digest, "little") == 0x85556D7B36E6A56A


def test_aggregate_gap_arithmetic():
    ub = load_ub_table("kacem,k1,10,1\n")
    s = aggregate([rec("k1", "NRPA", m, i) for i, m in enumerate([10, 12, 14])], ub)
    cell = s.cells[("kacem", "k1")]["NRPA"]
    assert (cell.min, cell.mean, cell.gap_min_pct, cell.gap_mean_pct) == (10, 12, 0.0, 20.0)
    assert cell.std == pytest.approx(np.std([10, 12, 14]))
    assert s.ub_reached == {"NRPA": 1}


def test_ties_share_best_value_frequency():
    recs = [rec("k1", "NRPA", 11), rec("k1", "GNRPA", 11), rec("k1", "MCTS", 13)]
    s = aggregate(recs)
    assert s.best_value_frequency == {"MCTS": 0, "NRPA": 1, "GNRPA": 1}
    assert s.average_rank == {"MCTS": 3.0, "NRPA": 1.5, "GNRPA": 1.5}
    assert any("no upper bound" in w for w in s.warnings)
    assert s.average_gap_min_pct["NRPA"] is None


def random_records(rng, algos=("NRPA", "GNRPA", "ABGNRPA"), instances=4, runs=3):
    out = []
    for i in range(instances):
        for a in algos:
            for r in range(runs):
                out.append(rec(f"k{i + 1}", a, rng.randint(10, 20), r))
    return out


@given(st.integers(0, 10**6))
def test_aggregate_invariants(seed):
    rng = random.Random(seed)
    recs = random_records(rng)
    ub = load_ub_table("".join(f"kacem,k{i + 1},10,0\n" for i in range(4)))
    s = aggregate(recs, ub)
    assert sum(s.best_value_frequency.values()) >= len(s.cells)
    for row in s.cells.values():
        for c in row.values():
            assert c.gap_min_pct <= c.gap_mean_pct
            assert c.gap_min_pct >= 0
    # relabeling algorithms relabels their ranks
    names = {"NRPA": "X", "GNRPA": "Y", "ABGNRPA": "Z"}
    relabeled = aggregate([RunRecord(**{**r.__dict__, "algo": names[r.algo]}) for r in recs], ub)
    assert {names[a]: v for a, v in s.average_rank.items()} == relabeled.average_rank
    assert report(s, "json") == report(aggregate(list(recs), ub), "json")


def test_reports():
    s = aggregate(random_records(random.Random(1)), load_ub_table("kacem,k1,10,1\n"))
    md = report(s, "markdown")
    assert md.splitlines()[0].startswith("| dataset | instance | UB |")
    assert "**" in md and "average rank (mean)" in md
    csv_text = report(s, "csv")
    assert csv_text.splitlines()[0] == ("dataset,instance,algo,runs,min,mean,std,ub,gap_min_pct,"
                                        "gap_mean_pct,bias_deviation_pct")
    again = summary_from_json(report(s, "json"))
    assert report(again, "json") == report(s, "json")
    empty = aggregate([])
    assert report(empty, "csv").strip().count("\n") == 0
    assert report(empty, "markdown").startswith("| dataset | instance | UB |")
    with pytest.raises(ValueError):
        report(s, "xml")


def test_record_json_round_trip():
    r = rec("k1", "NRPA", 12)
    d = json.loads(r.to_json())
    assert "bias_deviation_pct" not in d
    assert RunRecord.from_dict(d) == r
    assert set(d) >= {"dataset", "instance", "algo", "seed", "makespan", "elapsed_s", "playouts"}


def suite(tmp_path, **kw):
    base = dict(instances=[("kacem", "k1")], algos=["NRPA"], runs_per_pair=3, budget_playouts=20, base_seed=5)
    base.update(kw)
    return SuiteConfig(**base)


def test_run_suite_counts_and_determinism(tmp_path):
    a = run_suite(suite(tmp_path), tmp_path / "a.ndjson")
    b = run_suite(suite(tmp_path), tmp_path / "b.ndjson")
    assert len(a) == 3
    assert [r.makespan for r in a] == [r.makespan for r in b]
    assert [r.seed for r in a] == [derive_seed(5, "k1", "NRPA", i) for i in range(3)]
    assert len(read_records(tmp_path / "a.ndjson")) == 3


def test_run_suite_resume(tmp_path):
    out = tmp_path / "r.ndjson"
    first = run_suite(suite(tmp_path, runs_per_pair=2), out)
    more = run_suite(suite(tmp_path, runs_per_pair=4), out)
    assert len(first) == 2 and len(more) == 4
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert (tmp_path / "r.ndjson.done").read_text().split() == [r.key for r in more]
    # a record written without its marker (crash in between) is run again, not duplicated
    with out.open("a") as fh:
        fh.write(more[0].to_json().replace('"run_index": 0', '"run_index": 9') + "\n")
    again = run_suite(suite(tmp_path, runs_per_pair=4), out)
    assert len(again) == 4
    assert [r.makespan for r in again] == [r.makespan for r in more]


def test_run_suite_parallel_matches_serial(tmp_path):
    serial = run_suite(suite(tmp_path, algos=["NRPA", "GNRPA"]), tmp_path / "s.ndjson")
    par = run_suite(suite(tmp_path, algos=["NRPA", "GNRPA"], parallelism=2), tmp_path / "p.ndjson")
    assert [(r.key, r.makespan) for r in serial] == [(r.key, r.makespan) for r in par]


def test_run_suite_skips_missing_instance(tmp_path, caplog):
    recs = run_suite(suite(tmp_path, instances=[("kacem", "nope"), ("kacem", "k1")], runs_per_pair=1))
    assert len(recs) == 1
    assert "nope" in caplog.text


def test_per_algorithm_playout_override(tmp_path):
    recs = run_suite(suite(tmp_path, algos=["RandGreedy"], budget_playouts=None, budget_seconds=5,
                           algo_playouts={"RandGreedy": 1}))
    assert all(r.playouts == 1 for r in recs)


def test_load_suite(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text('algos = ["NRPA"]\nruns_per_pair = 2\nbudget_playouts = 5\n'
                 'instances = [["kacem", "k1"]]\n[params]\ngamma = 1e-4\n')
    cfg = load_suite(p)
    assert cfg.params.gamma == 1e-4 and cfg.runs_per_pair == 2
    j = tmp_path / "s.json"
    j.write_text(json.dumps({"algos": ["NRPA"], "budget_seconds": 1, "instances": [["kacem", "k1"]]}))
    assert load_suite(j).budget_seconds == 1
    p.write_text('algos = ["NRPA"]\nbudget_playouts = 5\ninstances = []\ncolour = 1\n')
    with pytest.raises(ValueError, match="colour"):
        load_suite(p)
