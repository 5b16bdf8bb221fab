import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abgnrpa.heuristics import BiasTable, HeuristicKind
from abgnrpa.instance import ActionId, random_instance
from abgnrpa.policy import (
    BiasMode,
    PolicyTable,
    SamplerParams,
    action_probabilities,
    adapt,
    sample_action,
    sample_logits,
    softmax,
    update_bias,
)
from abgnrpa.schedule import IllegalActionError, Trajectory, initial_state, is_terminal, legal_actions

A, B, C, D = (ActionId(i, 0, 0) for i in range(4))


def test_probability_examples():
    assert action_probabilities(PolicyTable(), None, [A, B], 1.0) == [0.5, 0.5]
    p = action_probabilities(PolicyTable({A: math.log(2)}), None, [A, B], 1.0)
    assert p == pytest.approx([2 / 3, 1 / 3], abs=1e-15)
    p = action_probabilities(PolicyTable(), {A: 1.0, B: 0.0}, [A, B], 1.0)
    assert p == pytest.approx([math.e / (math.e + 1), 1 / (math.e + 1)], abs=1e-15)


def test_temperature_scales_weights_only():
    p = action_probabilities(PolicyTable({A: 2.0}), {A: 1.0, B: 0.0}, [A, B], 2.0)
    assert p[0] == pytest.approx(math.exp(2.0) / (math.exp(2.0) + 1))


def test_softmax_does_not_overflow():
    p = softmax([1000.0, 999.0])
    assert p == pytest.approx([1 / (1 + math.exp(-1)), math.exp(-1) / (1 + math.exp(-1))])


floats = st.floats(-50, 50, allow_nan=False)


@given(st.lists(st.tuples(floats, floats), min_size=1, max_size=12), floats,
       st.floats(0.05, 20, allow_nan=False))
def test_distribution_properties(wb, shift, tau):
    legal = [ActionId(i, 0, 0) for i in range(len(wb))]
    policy = PolicyTable({a: w for a, (w, _) in zip(legal, wb)})
    bias = {a: b for a, (_, b) in zip(legal, wb)}
    p = action_probabilities(policy, bias, legal, tau)
    assert abs(math.fsum(p) - 1) < 1e-9
    shifted = PolicyTable({a: w + shift for a, w in policy.items()})
    q = action_probabilities(shifted, bias, legal, tau)
    assert max(abs(x - y) for x, y in zip(p, q)) < 1e-9


def test_sampling_point_mass_and_seed():
    rng = random.Random(0)
    assert all(sample_action([A, B], [1.0, 0.0], rng) == A for _ in range(100))
    draws1 = [sample_action([A, B, C], [0.2, 0.3, 0.5], random.Random(42)) for _ in range(1)]
    r1, r2 = random.Random(7), random.Random(7)
    assert [sample_logits([0.0, 1.0, 2.0], r1) for _ in range(50)] == [
        sample_logits([0.0, 1.0, 2.0], r2) for _ in range(50)]
    assert draws1


def test_sampling_frequencies():
    from scipy.stats import chisquare

    rng = random.Random(123)
    n = 10**6
    hits = sum(sample_action([A, B], [0.5, 0.5], rng) == A for _ in range(n))
    assert abs(hits / n - 0.5) < 0.01
    assert chisquare([hits, n - hits]).pvalue > 1e-4
    counts = [0, 0, 0]
    for _ in range(200000):
        counts[sample_logits([0.0, math.log(2), math.log(5)], rng)] += 1
    assert chisquare(counts, [200000 / 8, 200000 * 2 / 8, 200000 * 5 / 8]).pvalue > 1e-4


def chain_instance():
    # two jobs, each with two machine choices; generates steps with 2-4 legal actions
    return random_instance(5, 2, 2, ops=(2, 2), flexibility=(2, 2))


def test_adapt_two_action_arithmetic():
    from abgnrpa.instance import parse_instance

    inst = parse_instance("2 1\n1 1 1 3\n1 1 1 4\n")
    best = Trajectory((ActionId(1, 0, 0), ActionId(0, 0, 0)), 7)
    new = adapt(PolicyTable(), inst, best, SamplerParams(alpha=1.0))
    assert new[ActionId(1, 0, 0)] == pytest.approx(0.5)
    # first step: the other action loses 0.5; second step: it is the only action
    assert new[ActionId(0, 0, 0)] == pytest.approx(-0.5)


def test_adapt_single_action_unchanged():
    from abgnrpa.instance import parse_instance

    inst = parse_instance("1 1\n1 1 1 3\n")
    new = adapt(PolicyTable(), inst, Trajectory((ActionId(0, 0, 0),), 3), SamplerParams())
    assert new[ActionId(0, 0, 0)] == 0.0


def test_adapt_alpha_zero_is_identity():
    inst = chain_instance()
    traj = rollout(inst, random.Random(1))
    policy = PolicyTable({a: 0.3 for a in traj.actions})
    new = adapt(policy, inst, traj, SamplerParams(alpha=0.0))
    assert all(new[a] == policy[a] for a in set(new) | set(policy))


def test_adapt_rejects_infeasible():
    inst = chain_instance()
    traj = rollout(inst, random.Random(1))
    bad = Trajectory(tuple(reversed(traj.actions)), traj.makespan)
    with pytest.raises(IllegalActionError):
        adapt(PolicyTable(), inst, bad, SamplerParams())


def rollout(inst, rng):
    s = initial_state(inst)
    while not is_terminal(s):
        s.play(rng.choice(legal_actions(s)))
    return Trajectory.from_state(s)


def step_probabilities(policy, inst, traj, tau, mode, bias):
    """Probability of each trajectory action at its own step."""
    from abgnrpa.heuristics import state_biases

    s = initial_state(inst)
    out = []
    for move in traj.actions:
        legal = legal_actions(s)
        if mode == BiasMode.RECOMPUTE:
            b = state_biases(HeuristicKind.EET, s, legal, "mean")
        elif mode == BiasMode.TABLE:
            b = bias
        else:
            b = None
        p = action_probabilities(policy, b, legal, tau)
        out.append((len(legal), p[legal.index(move)], legal, p))
        s.play(move)
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.sampled_from([BiasMode.NONE, BiasMode.RECOMPUTE]),
       st.floats(0.2, 5), st.floats(0.05, 2))
def test_adapt_properties(inst_seed, roll_seed, mode, tau, alpha):
    inst = random_instance(inst_seed, 3, 3, ops=(1, 3), flexibility=(1, 3))
    rng = random.Random(roll_seed)
    start = rollout(inst, rng)
    policy = PolicyTable({a: rng.uniform(-1, 1) for a in start.actions})
    traj = rollout(inst, rng)
    params = SamplerParams(tau=tau, alpha=alpha)
    new = adapt(policy, inst, traj, params, mode, None, HeuristicKind.EET, "mean")
    # per-step batch update: every legal action moves by -alpha*(p - delta)/tau
    expected = PolicyTable(policy)
    before = step_probabilities(policy, inst, traj, tau, mode, None)
    for (n, _, legal, p), move in zip(before, traj.actions):
        step_sum = 0.0
        for a, pa in zip(legal, p):
            d = -alpha * (pa - (a == move)) / tau
            expected[a] = expected.get(a, 0.0) + d
            step_sum += d
        assert abs(step_sum) < 1e-9
    for a in set(expected) | set(new):
        assert new.get(a, 0.0) == pytest.approx(expected.get(a, 0.0), abs=1e-12)
    # the log-likelihood of the trajectory goes up whenever some step had a choice;
    # single actions can still lose probability because the same action is an
    # unchosen alternative at other steps. The logits move by alpha/tau**2 per
    # unit of gradient, so large steps may overshoot and are not checked.
    after = step_probabilities(new, inst, traj, tau, mode, None)
    if alpha / tau**2 <= 1 and any(n >= 2 for n, _, _, _ in before):
        assert sum(math.log(x[1]) for x in after) > sum(math.log(x[1]) for x in before)


def test_adapt_table_mode_uses_current_biases(k1):
    bias = BiasTable()
    traj = rollout(k1, random.Random(4))
    new = adapt(PolicyTable(), k1, traj, SamplerParams(), BiasMode.TABLE, bias, HeuristicKind.EET, "mean")
    assert set(traj.actions) <= bias.initialized
    before = step_probabilities(PolicyTable(), k1, traj, 1.0, BiasMode.TABLE, bias.beta)
    after = step_probabilities(new, k1, traj, 1.0, BiasMode.TABLE, bias.beta)
    assert sum(math.log(x[1]) for x in after) > sum(math.log(x[1]) for x in before)


def test_single_action_probability_can_drop():
    # weights are shared across states: job 2's first op is an unchosen alternative
    # at three steps and chosen at the fourth, which outweighs the third step's gain
    inst = random_instance(14, 3, 3, ops=(1, 3), flexibility=(1, 3))
    rng = random.Random(15)
    rollout(inst, rng)
    traj = rollout(inst, rng)
    new = adapt(PolicyTable(), inst, traj, SamplerParams())
    before = step_probabilities(PolicyTable(), inst, traj, 1.0, BiasMode.NONE, None)
    after = step_probabilities(new, inst, traj, 1.0, BiasMode.NONE, None)
    drops = [(b[1], a[1]) for b, a in zip(before, after) if b[0] >= 2 and a[1] <= b[1]]
    assert drops and drops[0][0] == pytest.approx(1 / 3)


def test_seed_mode_initializes_from_bias(k1):
    from abgnrpa.heuristics import state_biases

    traj = rollout(k1, random.Random(4))
    policy = PolicyTable()
    adapt(policy, k1, traj, SamplerParams(alpha=0.0), BiasMode.SEED, None, HeuristicKind.EET, "mean")
    s = initial_state(k1)
    first = state_biases(HeuristicKind.EET, s, legal_actions(s), "mean")
    assert [policy[a] for a in legal_actions(s)] == first


def test_update_bias_example():
    bias = BiasTable()
    bias.beta.update(dict.fromkeys([A, B, C, D], 0.0))
    update_bias(bias, [A, B, C, D], A, lb=10, gamma=1)
    assert bias.beta == {A: 10.0, B: -2.5, C: -2.5, D: -2.5}


def test_update_bias_gamma_zero_and_contract():
    bias = BiasTable()
    bias.beta.update({A: 0.4, B: 0.6})
    update_bias(bias, [A, B], B, lb=50, gamma=0)
    assert bias.beta == {A: 0.4, B: 0.6}
    with pytest.raises(KeyError):
        update_bias(bias, [A, C], A, lb=5, gamma=1)
    with pytest.raises(IllegalActionError):
        update_bias(bias, [A, B], C, lb=5, gamma=1)


@given(st.integers(1, 20), st.floats(0, 1e4), st.floats(0, 1), st.data())
def test_update_bias_net_drift(n, lb, gamma, data):
    legal = [ActionId(i, 0, 0) for i in range(n)]
    chosen = data.draw(st.sampled_from(legal))
    bias = BiasTable()
    bias.beta.update(dict.fromkeys(legal, 0.0))
    update_bias(bias, legal, chosen, lb, gamma)
    assert math.fsum(bias.beta.values()) == pytest.approx(gamma * lb / n, rel=1e-9, abs=1e-9)
