"""Environment mechanics: aggregation, conservation, determinism, ground truth."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daaf import (
    BanditInstance,
    ConfigurationError,
    DelayModel,
    bernoulli_kl,
    lai_robbins_constant,
    new_environment,
    pseudo_regret_increment,
)

# Frozen from an independent high-precision evaluation:
# KL(Bernoulli(0.5), Bernoulli(0.6)) and 0.1 / KL.
KL_05_06 = 0.020410997260127565
LAI_ROBBINS_05_06 = 4.8993196523203599


def benchmark_instance(delay=None, horizon=1000):
    return BanditInstance((0.5, 0.6), delay or DelayModel.constant(0), horizon)


def test_new_environment_initial_state():
    env = new_environment(benchmark_instance(), seed=7)
    assert env.clock == 0
    assert env.generated_total == 0.0
    assert env.observed_total == 0.0
    assert env.pending_mass() == 0.0


def test_single_arm_rejected():
    with pytest.raises(ConfigurationError):
        BanditInstance((0.5,), DelayModel.constant(0), 100)


@pytest.mark.parametrize("means", [(-0.1, 0.5), (0.5, 1.2)])
def test_means_outside_unit_interval_rejected(means):
    with pytest.raises(ConfigurationError):
        BanditInstance(means, DelayModel.constant(0), 100)


def test_determinism_identical_seeds_replay():
    inst = benchmark_instance(DelayModel.uniform_int(20), horizon=500)
    a = new_environment(inst, seed=42)
    b = new_environment(inst, seed=42)
    actions = [t % 2 for t in range(500)]
    xs_a = [a.step(arm) for arm in actions]
    xs_b = [b.step(arm) for arm in actions]
    assert xs_a == xs_b


def test_zero_delay_certain_reward():
    inst = BanditInstance((1.0, 0.0), DelayModel.constant(0), 50)
    env = new_environment(inst, seed=0)
    assert all(env.step(0) == 1.0 for _ in range(50))


def test_constant_delay_shifts_arrivals():
    inst = BanditInstance((1.0, 0.0), DelayModel.constant(3), 50)
    env = new_environment(inst, seed=0)
    observed = [env.step(0) for _ in range(6)]
    assert observed == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]


def test_conservation_every_step():
    """generated == observed + pending after every step of a 1e5-step run;
    the pending mass is summed from the calendar itself, independent of the
    running totals."""
    inst = benchmark_instance(DelayModel.uniform_int(100), horizon=100_000)
    env = new_environment(inst, seed=3)
    for t in range(100_000):
        env.step(t % 2)
        assert env.generated_total == env.observed_total + env.pending_mass()


def test_mode_agreement_labeled_vs_aggregated():
    """Per-round sum of labeled arrivals equals the aggregated observation."""
    inst = benchmark_instance(DelayModel.geometric(0.05), horizon=3000)
    agg = new_environment(inst, seed=11)
    lab = new_environment(inst, seed=11)
    rng = np.random.default_rng(5)
    for _ in range(3000):
        arm = int(rng.integers(0, 2))
        x = agg.step(arm)
        arrivals = lab.step_labeled(arm)
        assert math.fsum(r for _, r in arrivals) == x


def test_labeled_arrivals_carry_delays():
    inst = BanditInstance((1.0, 0.0), DelayModel.constant(2), 50)
    env = new_environment(inst, seed=0)
    assert env.step_labeled(0) == []
    assert env.step_labeled(0) == []
    arrivals = env.step_labeled(0)
    assert arrivals == [(0, 1.0)]


def test_observation_nonnegative_integer_for_bernoulli():
    inst = benchmark_instance(DelayModel.uniform_int(5), horizon=2000)
    env = new_environment(inst, seed=1)
    in_flight = 0.0
    for t in range(2000):
        before = env.pending_mass()
        x = env.step(t % 2)
        assert x >= 0.0 and x == int(x)
        assert x <= before + 1  # at most the in-flight mass plus this round's reward


def test_arm_out_of_range():
    env = new_environment(benchmark_instance(), seed=0)
    with pytest.raises(IndexError):
        env.step(2)
    with pytest.raises(IndexError):
        env.step_labeled(-1)


def test_pseudo_regret_increment_examples():
    inst = benchmark_instance()
    assert pseudo_regret_increment(inst, 0) == pytest.approx(0.1, abs=1e-12)
    assert pseudo_regret_increment(inst, 1) == 0.0
    assert sum(pseudo_regret_increment(inst, 0) for _ in range(10)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(IndexError):
        pseudo_regret_increment(inst, 5)


def test_lai_robbins_benchmark_instance():
    assert bernoulli_kl(0.5, 0.6) == pytest.approx(KL_05_06, rel=1e-12)
    assert lai_robbins_constant(benchmark_instance()) == pytest.approx(LAI_ROBBINS_05_06, rel=1e-12)


def test_lai_robbins_degenerate_cases():
    equal = BanditInstance((0.4, 0.4, 0.4), DelayModel.constant(0), 10)
    assert lai_robbins_constant(equal) == 0.0
    dup = BanditInstance((0.4, 0.6, 0.6), DelayModel.constant(0), 10)
    expected = 0.2 / bernoulli_kl(0.4, 0.6)
    assert lai_robbins_constant(dup) == pytest.approx(expected, rel=1e-12)


def test_lai_robbins_domain_error():
    inst = BanditInstance((0.5, 1.0), DelayModel.constant(0), 10)
    with pytest.raises(ValueError):
        lai_robbins_constant(inst)


@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.05, 1.0))
@settings(max_examples=25, deadline=None)
def test_conservation_property_geometric(seed, p):
    inst = BanditInstance((0.3, 0.7), DelayModel.geometric(p), 400)
    env = new_environment(inst, seed=seed)
    for t in range(400):
        env.step(t % 2)
    assert env.generated_total == env.observed_total + env.pending_mass()
