"""Acceptance gate: one test per criterion, at the stated scales and
tolerances.  Run with ``pytest tests/test_acceptance.py -v -s`` to see one
printed line per criterion.

Criterion 8 is asserted exactly as stated (horizon 50000).  At that horizon
the elimination machinery cannot finish phase 4 for the larger delay
locations, so relative regret is set by where the horizon truncates the
suboptimal arm's block and the linear-scaling property does not hold; see
the companion full-scale test, which passes at horizon 250000.
"""

import dataclasses

import numpy as np
import pytest

from daaf import (
    BanditInstance,
    DelayModel,
    EnvState,
    ExperimentConfig,
    PolicySpec,
    mean_delay_sweep,
    run_experiment,
    run_replication_full,
)
from daaf.config import load_config_file
from daaf.outputs import write_outputs
from daaf.validation import (
    arithmetic_matrix,
    check_corruption_bound,
    check_elimination_timing,
    check_schedule_facts,
    check_width_inequality,
)

WORKERS = 2


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"[acceptance] {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")


@pytest.fixture(scope="module")
def ratio_experiment(tmp_path_factory):
    """Criterion 1/9 shared run: the fig3a preset at both worker counts."""
    cfg, _ = load_config_file("fig3a")
    out = {}
    for workers in (1, 2):
        run_cfg = dataclasses.replace(cfg, workers=workers)
        summary = run_experiment(run_cfg)
        out_dir = tmp_path_factory.mktemp(f"fig3a-w{workers}")
        write_outputs(summary, out_dir)
        out[workers] = (summary, out_dir)
    return out


def test_criterion_1_ratio_convergence(ratio_experiment):
    """Ratio series to QPM-D flatten over the last quarter of checkpoints."""
    summary, _ = ratio_experiment[2]
    start = len(summary.checkpoints) * 3 // 4
    worst = {}
    for pair in (("odaaf", "qpmd"), ("odaaf-b", "qpmd")):
        series = summary.ratios[pair][start:]
        series = series[~np.isnan(series)]
        worst[pair] = float(series.max() / series.min())
    passed = all(v <= 1.5 for v in worst.values())
    report("criterion 1 (ratio convergence)", passed,
           ", ".join(f"{a}/{b} max/min={v:.3f}" for (a, b), v in worst.items()))
    assert worst[("odaaf", "qpmd")] <= 1.5
    assert worst[("odaaf-b", "qpmd")] <= 1.5


def test_criterion_2_elimination_timing():
    """Constant(50) delays: suboptimal arm out by phase 5 in >=95% of 200
    replications, optimal arm never eliminated in >=99%."""
    instance = BanditInstance((0.5, 0.6), DelayModel.constant(50), 250_000)
    result = check_elimination_timing(instance, reps=200, master_seed=0, workers=WORKERS)
    d = result.details
    report("criterion 2 (elimination timing)", result.passed,
           f"target phase {d['target_phase']}, on-time {d['eliminated_on_time']:.1%}, "
           f"optimal survived {d['optimal_survived']:.1%}")
    assert d["target_phase"] == 5
    assert d["eliminated_on_time"] >= 0.95
    assert d["optimal_survived"] >= 0.99


def test_criterion_3_width_construction():
    """w_m(n_m) <= tolerance/2 across every variant and the stated grid."""
    results = [check_width_inequality(cfg) for cfg in arithmetic_matrix()]
    margin = min(r.margin for r in results)
    passed = all(r.passed for r in results)
    report("criterion 3 (width construction)", passed,
           f"{len(results)} configurations, min slack {margin:.3e}")
    for r in results:
        assert r.passed, r.name


def test_criterion_4_schedule_facts():
    """Doubling up to half log2(T/4) and nu_m >= d when the d-branch binds."""
    results = [check_schedule_facts(cfg) for cfg in arithmetic_matrix()]
    passed = all(r.passed for r in results)
    binding = sum(
        1 for r in results for row in r.details["rows"] if row.get("d_branch_binding")
    )
    report("criterion 4 (schedule facts)", passed,
           f"{len(results)} configurations, {binding} d-branch binding phases checked")
    for r in results:
        assert r.passed, r.name


def test_criterion_5_zero_delay_trace_equality():
    """QPM-D equals UCB1 play for play under zero delay: 100 seeds, T=1e4."""
    instance = BanditInstance((0.5, 0.6), DelayModel.constant(0), 10_000)
    checkpoints = np.asarray([instance.horizon], dtype=np.int64)
    mismatches = 0
    for seed in range(100):
        a = run_replication_full(PolicySpec("qpmd", "q"), instance, seed, checkpoints, record_arms=True)
        b = run_replication_full(PolicySpec("ucb1", "u"), instance, seed, checkpoints, record_arms=True)
        if not np.array_equal(a.arms, b.arms):
            mismatches += 1
    report("criterion 5 (zero-delay oracle equivalence)", mismatches == 0,
           f"{mismatches} mismatching seeds of 100")
    assert mismatches == 0


CONSERVATION_DELAYS_BOUNDED = [
    DelayModel.constant(0),
    DelayModel.constant(50),
    DelayModel.uniform_int(100),
]
CONSERVATION_DELAYS_UNBOUNDED = [
    DelayModel.geometric(0.02),
    DelayModel.discretized_exponential(0.02),
    DelayModel.discretized_truncated_normal(50, 10),
]
CONSERVATION_POLICIES_ALL = [
    PolicySpec("odaaf", "odaaf", variant="known-expectation"),
    PolicySpec("odaaf", "odaaf-v", variant="variance"),
    PolicySpec("ucb1", "ucb1"),
    PolicySpec("qpmd", "qpmd"),
]
CONSERVATION_POLICIES_BOUNDED = CONSERVATION_POLICIES_ALL + [
    PolicySpec("odaaf", "odaaf-b", variant="bounded"),
    PolicySpec("odaaf", "odaaf-nb", variant="naive-bounded"),
]


def test_criterion_6_conservation():
    """generated == observed + pending after every step of a 1e4-step run,
    exactly, for each policy x delay-model combination (the bound-requiring
    variants run only on bounded delay models)."""
    combos = [(s, d) for d in CONSERVATION_DELAYS_BOUNDED for s in CONSERVATION_POLICIES_BOUNDED]
    combos += [(s, d) for d in CONSERVATION_DELAYS_UNBOUNDED for s in CONSERVATION_POLICIES_ALL]
    horizon = 10_000
    checked = 0
    for spec, delay in combos:
        instance = BanditInstance((0.5, 0.6), delay, horizon)
        policy = spec.build(instance)
        env = EnvState(instance, seed=1234)
        labeled = policy.feedback_mode == "labeled"
        t = 0
        while t < horizon and getattr(policy, "committed_arm", None) is None:
            t += 1
            arm = policy.select(t)
            feedback = env.step_labeled(arm) if labeled else env.step(arm)
            assert env.generated_total == env.observed_total + env.pending_mass(), (
                spec.label, delay.kind, t)
            policy.observe(t, feedback)
        checked += 1
    report("criterion 6 (conservation)", True, f"{checked} policy x delay combinations, exact")


def test_criterion_7_corruption_bound():
    """Per-phase estimate bias within m E[tau] / n_m (+4 stderr), 1000 reps."""
    instance = BanditInstance((0.5, 0.6), DelayModel.uniform_int(100), 250_000)
    result = check_corruption_bound(instance, reps=1000, master_seed=0, workers=WORKERS)
    pairs = result.details["pairs"]
    report("criterion 7 (corruption bound)", result.passed,
           f"{len(pairs)} (phase, arm) pairs, min margin {result.margin:.4f}")
    assert pairs, "expected conclusive (phase, arm) pairs"
    assert result.passed, pairs


def _sweep_ratios(horizon: int, replications: int):
    instance = BanditInstance(
        (0.5, 0.6), DelayModel.discretized_truncated_normal(0, 10), horizon
    )
    cfg = ExperimentConfig(
        instance=instance,
        policies=(PolicySpec("odaaf", "odaaf", variant="known-expectation"),),
        replications=replications,
        master_seed=20180111,
        workers=WORKERS,
    )
    sweep = mean_delay_sweep(cfg, [0, 25, 50, 100])
    points = sweep.points["odaaf"]
    x = np.asarray([p.mu0 for p in points])
    y = np.asarray([p.ratio for p in points])
    slack = np.asarray([4.0 * p.final_stderr / max(points[0].final_mean, 1e-12) for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    r2 = 1.0 - float((residual**2).sum() / ((y - y.mean()) ** 2).sum())
    nondecreasing = bool(np.all(np.diff(y) >= -(slack[:-1] + slack[1:])))
    return y, r2, nondecreasing


def test_criterion_8_linear_delay_scaling():
    """As stated: truncated-normal(mu0, 10) delays, T=50000, 100 reps."""
    ratios, r2, nondecreasing = _sweep_ratios(horizon=50_000, replications=100)
    passed = r2 >= 0.9 and nondecreasing
    report("criterion 8 (linear delay scaling, T=50000)", passed,
           f"ratios {np.round(ratios, 3).tolist()}, R^2={r2:.3f}, nondecreasing={nondecreasing}")
    assert r2 >= 0.9, (
        "horizon-truncation artifact at the desk scale: phase 4 cannot complete "
        "within T=50000 for the larger delay locations, so relative regret is "
        "non-monotone in the delay mean; the property holds at T=250000 "
        "(see test_criterion_8_full_scale_reference and the decisions ledger)"
    )
    assert nondecreasing


def test_criterion_8_full_scale_reference():
    """Same sweep at the full horizon 250000: every phase the sweep touches
    completes, and the linear-scaling property holds."""
    ratios, r2, nondecreasing = _sweep_ratios(horizon=250_000, replications=100)
    passed = r2 >= 0.9 and nondecreasing
    report("criterion 8 reference (T=250000)", passed,
           f"ratios {np.round(ratios, 3).tolist()}, R^2={r2:.3f}, nondecreasing={nondecreasing}")
    assert r2 >= 0.9
    assert nondecreasing


def test_criterion_9_worker_count_determinism(ratio_experiment):
    """The criterion-1 run repeated with different worker counts produces a
    byte-identical trajectories.csv."""
    _, dir1 = ratio_experiment[1]
    _, dir2 = ratio_experiment[2]
    b1 = (dir1 / "trajectories.csv").read_bytes()
    b2 = (dir2 / "trajectories.csv").read_bytes()
    report("criterion 9 (determinism across workers)", b1 == b2,
           f"{len(b1)} bytes each")
    assert b1 == b2
