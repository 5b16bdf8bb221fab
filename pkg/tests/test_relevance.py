import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abgnrpa.bench import pearson
from abgnrpa.instance import parse_instance, random_instance
from abgnrpa.relevance import (
    NodeLimitExceeded,
    branches_csv,
    correlation_study,
    enumerate_branches,
    exhaustive_branch_stats,
)

import oracles


def test_tiny_has_four_branches(tiny):
    branches = enumerate_branches(tiny)
    assert len(branches) == 4
    assert [len([b for b in branches if b.first == f]) for f in dict.fromkeys(b.first for b in branches)] == [1, 1, 2]


def test_no_flexibility_two_jobs():
    inst = parse_instance("2 1\n1 1 1 2\n1 1 1 3\n")
    assert len(enumerate_branches(inst)) == 2


def test_too_small():
    with pytest.raises(ValueError):
        enumerate_branches(parse_instance("1 1\n1 1 1 7\n"))


def test_single_path_branch():
    inst = parse_instance("1 1\n3 1 1 1 1 1 2 1 1 3\n")
    (b,) = enumerate_branches(inst)
    stats = exhaustive_branch_stats(inst, b)
    assert stats.min_makespan == stats.mean_makespan == 6 and stats.leaf_count == 1


def test_node_limit():
    inst = random_instance(1, 4, 3, ops=(2, 3), flexibility=(2, 3))
    with pytest.raises(NodeLimitExceeded, match="reduce"):
        exhaustive_branch_stats(inst, enumerate_branches(inst)[0], node_limit=50)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_branches_partition_the_tree(seed):
    inst = random_instance(seed, 3, 2, ops=(1, 2), flexibility=(1, 2))
    if inst.operation_count < 2:
        return
    best, leaves, total = oracles.exhaustive_optimum(inst)
    res = correlation_study(inst)
    assert res.leaves == leaves == sum(b.leaf_count for b in res.stats)
    assert sum(b.makespan_sum for b in res.stats) == total
    assert res.optimum == best
    for b in res.stats:
        assert b.min_makespan <= b.mean_makespan
    if res.r is not None:
        assert -1 <= res.r <= 1
        assert res.r == pytest.approx(oracles.textbook_pearson(
            [b.min_makespan for b in res.stats], [b.mean_makespan for b in res.stats]), abs=1e-12)


def test_identical_branches_undefined():
    inst = parse_instance("2 2\n1 1 1 2\n1 1 2 2\n")
    res = correlation_study(inst)
    assert res.branches == 2 and res.r is None


def test_perfect_linear_correlation():
    # two operations in total, so every branch is a single schedule and min == mean
    inst = parse_instance("2 2\n1 2 1 1 2 5\n1 1 1 1\n")
    res = correlation_study(inst)
    assert [b.min_makespan for b in res.stats] == [2, 5, 2, 5]
    assert res.r == pytest.approx(1.0, abs=1e-12)


def test_spearman_option(tiny):
    res = correlation_study(tiny, method="spearman")
    assert res.method == "spearman"
    with pytest.raises(ValueError):
        correlation_study(tiny, method="kendall")


def test_csv(tiny):
    res = correlation_study(tiny)
    lines = branches_csv(res.stats).splitlines()
    assert lines[0] == "first,second,min,mean,leaves"
    assert len(lines) == 5
    assert lines[1] == "0:0:1,1:0:2,4,4.0,1"
