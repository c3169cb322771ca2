"""Elimination-policy state machine: play plan, bridge, elimination, commit."""

import math

import pytest

from daaf import (
    BanditInstance,
    DelayModel,
    OdaafConfig,
    OdaafPolicy,
    PolicySpec,
    eliminate_arms,
    run_replication_full,
)


def make_policy(n_arms=2, variant="known-expectation", schedule=(5, 12, 26), **kw):
    if variant in ("bounded", "naive-bounded"):
        kw.setdefault("delay_bound", 5)
    if variant == "variance":
        kw.setdefault("delay_variance", 4.0)
    cfg = OdaafConfig(variant, 100_000, 10.0, schedule_override=tuple(schedule), **kw)
    return OdaafPolicy(cfg, n_arms)


class Driver:
    """Feeds observations round by round, tracking the global clock."""

    def __init__(self, policy):
        self.policy = policy
        self.t = 0

    def run(self, observations):
        arms = []
        for x in observations:
            self.t += 1
            arm = self.policy.select(self.t)
            arms.append(arm)
            self.policy.observe(self.t, x)
        return arms


def drive(policy, observations):
    return Driver(policy).run(observations)


def test_plan_plays_active_arms_in_ascending_blocks():
    policy = make_policy(schedule=(5, 12))
    arms = drive(policy, [0.0] * 10)
    assert arms == [0] * 5 + [1] * 5
    assert policy.counts == [5, 5]


def test_bridge_follows_phase_end_and_discards():
    cfg = OdaafConfig("bounded", 100_000, 10.0, delay_bound=5, schedule_override=(5, 12))
    policy = OdaafPolicy(cfg, 2)
    driver = Driver(policy)
    assert cfg.bridge_enabled
    # phase 1: equal means, nobody eliminated; bridge = leader (arm 0 on ties)
    arms = driver.run([1.0] * 10)
    assert arms == [0] * 5 + [1] * 5
    bridge_arms = driver.run([0.7] * 5)  # nu_1 = 5 bridge rounds
    assert bridge_arms == [0] * 5
    assert policy.sums == [5.0, 5.0]  # bridge observations discarded
    assert policy.counts == [5, 5]
    rec = policy.trace.records[0]
    assert rec.bridge == (0, 11, 15)
    assert rec.blocks == {0: (1, 5), 1: (6, 10)}
    assert rec.start == 1 and rec.end == 15
    # phase 2 resumes with nu_2 = 7 plays per arm
    next_arms = driver.run([0.0] * 14)
    assert next_arms == [0] * 7 + [1] * 7
    assert policy.counts == [12, 12]


def test_no_bridge_for_known_expectation():
    policy = make_policy(schedule=(5, 12))
    drive(policy, [1.0] * 10)
    assert policy.trace.records[0].bridge is None
    # phases abut: next round starts phase 2 immediately
    assert policy.select(11) in (0, 1)
    assert policy._mode == "play"


def test_elimination_rule_examples():
    survivors, eliminated, leader = eliminate_arms({0: 0.50, 1: 0.70}, 0.125)
    assert eliminated == [0] and survivors == [1] and leader == 1
    survivors, eliminated, _ = eliminate_arms({0: 0.60, 1: 0.62}, 0.125)
    assert eliminated == [] and survivors == [0, 1]
    survivors, eliminated, leader = eliminate_arms({0: 0.5, 1: 0.5, 2: 0.5}, 0.01)
    assert eliminated == [] and leader == 0  # ties keep everyone, leader lowest index


def test_leader_never_eliminated():
    survivors, eliminated, leader = eliminate_arms({0: 0.1, 1: 0.9, 2: 0.2}, 0.05)
    assert leader == 1 and 1 in survivors and set(eliminated) == {0, 2}


def test_elimination_commits_single_survivor():
    policy = make_policy(schedule=(4, 10))
    # arm 0 observes 0, arm 1 observes 1 -> gap 1 > tolerance 0.5
    drive(policy, [0.0] * 4 + [1.0] * 4)
    assert policy.trace.records[0].eliminated == (0,)
    assert policy.committed_arm == 1
    assert policy.trace.commit_round == 8
    # committed: selects the survivor forever, observations ignored
    assert policy.select(9) == 1
    policy.observe(9, 0.3)
    assert policy.sums == [0.0, 4.0]


def test_tolerance_halves_exactly():
    policy = make_policy(schedule=(2, 5, 11, 23, 47, 95))
    driver = Driver(policy)
    for phase in range(1, 6):
        assert policy.tolerance == 2.0 ** -phase
        nu = policy.schedule[phase - 1] - (policy.schedule[phase - 2] if phase > 1 else 0)
        driver.run([0.5] * (2 * nu))
    assert policy.tolerance == 2.0 ** -6


def test_schedule_exhaustion_commits_to_empirical_best():
    policy = make_policy(schedule=(3,))  # single feasible phase
    drive(policy, [0.2] * 3 + [0.4] * 3)
    assert policy.committed_arm == 1
    assert policy.trace.committed_arm == 1


def test_empty_schedule_commits_immediately():
    cfg = OdaafConfig("known-expectation", 4, 10.0)  # horizon too small for a phase
    policy = OdaafPolicy(cfg, 2)
    assert policy.committed_arm == 0
    assert policy.select(1) == 0


def test_select_past_horizon_rejected():
    cfg = OdaafConfig("known-expectation", 50, 0.0, schedule_override=(5,))
    policy = OdaafPolicy(cfg, 2)
    with pytest.raises(ValueError):
        policy.select(51)


def test_negative_observation_rejected():
    policy = make_policy()
    policy.select(1)
    with pytest.raises(ValueError):
        policy.observe(1, -0.1)


def test_active_sets_nested_and_counts_bounded():
    inst = BanditInstance((0.2, 0.5, 0.8), DelayModel.uniform_int(4), 30_000)
    spec = PolicySpec("odaaf", "o", variant="bounded")
    res = run_replication_full(spec, inst, seed=5, use_backend="python")
    trace = res.trace
    previous = {0, 1, 2}
    for rec in trace.records:
        current = set(rec.means)
        assert current <= previous
        assert current  # never empty
        for arm in current:
            assert rec.blocks[arm][1] <= rec.end
        previous = current - set(rec.eliminated)
        assert previous


def test_bridge_arm_rules():
    base = dict(variant="bounded", schedule=(4, 10))
    leader_policy = make_policy(**base)
    drive(leader_policy, [0.0] * 4 + [0.3] * 4)  # no elimination (gap 0.3 < 0.5)
    assert leader_policy.bridge_arm == 1
    lowest_policy = make_policy(bridge_arm_rule="lowest-index", **base)
    drive(lowest_policy, [0.0] * 4 + [0.3] * 4)
    assert lowest_policy.bridge_arm == 0


def test_phase_trace_tiles_rounds():
    """Blocks plus bridges partition [1, last completed round]."""
    inst = BanditInstance((0.3, 0.7), DelayModel.constant(2), 10_000)
    spec = PolicySpec("odaaf", "o", variant="bounded")
    res = run_replication_full(spec, inst, seed=2, use_backend="python")
    covered = []
    for rec in res.trace.records:
        segments = sorted(rec.blocks.values())
        if rec.bridge is not None:
            segments.append((rec.bridge[1], rec.bridge[2]))
        for s, u in segments:
            covered.append((s, u))
    covered.sort()
    assert covered[0][0] == 1
    for (s1, u1), (s2, u2) in zip(covered, covered[1:]):
        assert s2 == u1 + 1  # contiguous, disjoint, ordered
    assert covered[-1][1] == res.trace.records[-1].end


def test_rare_switching():
    """Arm switches stay within K * (completed phases + 1) plus bridge
    entries/exits; vastly fewer than the horizon."""
    inst = BanditInstance((0.4, 0.6), DelayModel.uniform_int(10), 20_000)
    spec = PolicySpec("odaaf", "o", variant="bounded")
    res = run_replication_full(spec, inst, seed=8, record_arms=True, use_backend="python")
    arms = res.arms[1 : res.sim_rounds + 1]
    switches = sum(1 for a, b in zip(arms, arms[1:]) if a != b)
    n_phases = len(res.trace.records)
    n_bridges = sum(1 for rec in res.trace.records if rec.bridge is not None)
    assert n_phases <= math.floor(0.5 * math.log2(inst.horizon / 4.0)) + 1
    assert switches <= 2 * (n_phases + 2) + 2 * n_bridges
