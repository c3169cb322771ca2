"""Compiled kernels vs the pure-Python reference: bit-identical runs.

The two backends must consume the same PCG64 stream draw for draw and land
on exactly the same floats; any divergence here is a correctness bug, not a
tolerance issue.
"""

import numpy as np
import pytest

from daaf import BanditInstance, DelayModel, PolicySpec, default_checkpoints, run_replication_full
from daaf import backend

pytestmark = pytest.mark.skipif(backend.kernels is None, reason="compiled kernels not built")

DELAYS = [
    DelayModel.constant(0),
    DelayModel.constant(7),
    DelayModel.uniform_int(30),
    DelayModel.geometric(0.05),
    DelayModel.discretized_exponential(0.05),
    DelayModel.discretized_truncated_normal(10, 4),
]

SPECS = [
    PolicySpec("odaaf", "odaaf", variant="known-expectation"),
    PolicySpec("odaaf", "odaaf-b", variant="bounded", delay_bound=30),
    PolicySpec("odaaf", "odaaf-v", variant="variance"),
    PolicySpec("odaaf", "odaaf-nb", variant="naive-bounded", delay_bound=30),
    PolicySpec("ucb1", "ucb1"),
    PolicySpec("qpmd", "qpmd"),
]


def test_uniform_stream_matches_generator():
    bg = np.random.PCG64(987)
    probe = backend.kernels.uniform_probe(64, bg)
    gen = np.random.Generator(np.random.PCG64(987))
    assert np.array_equal(probe, np.array([gen.random() for _ in range(64)]))


@pytest.mark.parametrize("model", DELAYS, ids=lambda m: f"{m.kind}{m.params}")
def test_delay_sampler_identical(model):
    code, a, b = model.kernel_code()
    compiled = backend.kernels.delay_samples(code, a, b, 5000, np.random.PCG64(31))
    gen = np.random.Generator(np.random.PCG64(31))
    pure = np.array([model.sample(gen.random) for _ in range(5000)])
    assert np.array_equal(compiled, pure)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
@pytest.mark.parametrize("model", DELAYS, ids=lambda m: f"{m.kind}{m.params}")
def test_replications_bit_identical(spec, model):
    inst = BanditInstance((0.5, 0.6), model, horizon=2500)
    checkpoints = default_checkpoints(inst.horizon, 100)
    a = run_replication_full(spec, inst, 5, checkpoints, record_arms=True, use_backend="compiled")
    b = run_replication_full(spec, inst, 5, checkpoints, record_arms=True, use_backend="python")
    assert a.trajectory.checkpoints == b.trajectory.checkpoints
    assert a.trajectory.final_regret == b.trajectory.final_regret
    assert np.array_equal(a.arms, b.arms)
    assert (a.generated, a.observed, a.pending) == (b.generated, b.observed, b.pending)
    assert a.sim_rounds == b.sim_rounds
    if spec.kind == "odaaf":
        assert a.trace.records == b.trace.records
        assert a.trace.committed_arm == b.trace.committed_arm
        assert a.trace.commit_round == b.trace.commit_round


def test_commit_fast_forward_identical():
    """Large gap forces early commitment; the extrapolated tails must agree."""
    inst = BanditInstance((0.1, 0.9), DelayModel.constant(0), horizon=50_000)
    spec = PolicySpec("odaaf", "odaaf", variant="known-expectation")
    checkpoints = default_checkpoints(inst.horizon)
    a = run_replication_full(spec, inst, 11, checkpoints, record_arms=True, use_backend="compiled")
    b = run_replication_full(spec, inst, 11, checkpoints, record_arms=True, use_backend="python")
    assert a.sim_rounds == b.sim_rounds < inst.horizon
    assert a.trajectory.checkpoints == b.trajectory.checkpoints
    assert a.trajectory.final_regret == b.trajectory.final_regret
    assert np.array_equal(a.arms, b.arms)


def test_three_arm_bridge_runs_identical():
    inst = BanditInstance((0.3, 0.5, 0.7), DelayModel.uniform_int(12), horizon=8000)
    spec = PolicySpec("odaaf", "odaaf-b", variant="bounded")
    a = run_replication_full(spec, inst, 17, record_arms=True, use_backend="compiled")
    b = run_replication_full(spec, inst, 17, record_arms=True, use_backend="python")
    assert np.array_equal(a.arms, b.arms)
    assert a.trace.records == b.trace.records
