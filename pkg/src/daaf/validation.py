"""Empirical and arithmetic checks of the implementable guarantees.

Four suites:

* ``widths``      - per-phase confidence width w_m(n_m) <= tolerance/2, the
                    inequality each sample schedule is constructed to ensure.
* ``schedule``    - n_m >= 2 n_{m-1} within the feasible phase range, and
                    nu_m >= d for the bounded variant when its d-branch binds.
* ``corruption``  - Monte-Carlo check that the bias of the per-phase mean
                    estimates stays within m * E[tau] / n_m (plus sampling slack).
* ``elimination`` - Monte-Carlo check of elimination timing: the suboptimal
                    arm goes by phase m_j, the optimal arm survives.

Statistical checks use >= 4 standard errors of slack over >= 100 surviving
samples per assertion, keeping the per-assertion false-alarm rate well under
1e-3.  Everything is deterministic given the seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .env import BanditInstance
from .errors import ConfigurationError, ScheduleExhausted
from .harness import PolicySpec, replication_seed, run_replication_full
from .delays import DelayModel
from .policies import OdaafConfig, full_schedule, schedule_nm

SUITE_NAMES = ("widths", "schedule", "corruption", "elimination", "all")


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margin": self.margin, "details": self.details}


@dataclass
class SuiteReport:
    suite: str
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
        }


# -- widths ------------------------------------------------------------------


def width_value(cfg: OdaafConfig, m: int, n: int) -> float:
    """Per-phase confidence width w_m evaluated at sample count ``n``.

    For the bounded variant the tighter form only applies when each phase
    can absorb the worst-case spillover (n >= m*d); past that point its
    schedule falls back to the known-expectation counts, so the matching
    width form is used.
    """
    tol = 2.0 ** -m
    log_t = math.log(cfg.horizon * tol * tol)
    base = 4.0 * log_t / (3.0 * n) + math.sqrt(2.0 * log_t / n)
    if cfg.variant == "known-expectation":
        return base + 3.0 * m * cfg.mean_delay / n
    if cfg.variant == "bounded":
        if n >= m * cfg.delay_bound:
            return base + 2.0 * cfg.mean_delay / n
        return base + 3.0 * m * cfg.mean_delay / n
    if cfg.variant == "variance":
        var_term = cfg.delay_variance
        if cfg.use_variance_over_mean and cfg.mean_delay >= 1.0:
            var_term = cfg.delay_variance / cfg.mean_delay
        return base + (2.0 * cfg.mean_delay + 4.0 * var_term) / n
    # naive-bounded
    return math.sqrt(log_t / (2.0 * n)) + m * cfg.delay_bound / n


def check_width_inequality(cfg: OdaafConfig) -> CheckResult:
    """w_m(n_m) <= tolerance_m / 2 for every feasible phase."""
    rows = []
    min_margin = math.inf
    passed = True
    m = 1
    while True:
        try:
            n_m = schedule_nm(cfg, m)
        except ScheduleExhausted:
            break
        w = width_value(cfg, m, n_m)
        slack = 2.0 ** -m / 2.0 - w
        min_margin = min(min_margin, slack)
        if slack < 0:
            passed = False
        rows.append({"m": m, "n_m": n_m, "width": w, "slack": slack})
        m += 1
    return CheckResult(
        name=f"widths[{_cfg_tag(cfg)}]",
        passed=passed,
        margin=min_margin if rows else math.inf,
        details={"phases": rows},
    )


# -- schedule facts ------------------------------------------------------------


def check_schedule_facts(cfg: OdaafConfig) -> CheckResult:
    """Doubling within the feasible range, and block length vs the delay
    bound whenever the bounded variant's d-branch decides n_m."""
    schedule = full_schedule(cfg)
    m_limit = math.floor(0.5 * math.log2(cfg.horizon / 4.0)) if cfg.horizon > 4 else 0
    rows = []
    passed = True
    min_margin = math.inf
    prev = 0
    for m, n_m in enumerate(schedule, start=1):
        nu = n_m - prev
        if 2 <= m <= m_limit:
            doubling_margin = n_m - 2 * prev
            nu_margin = nu - prev
            ok = doubling_margin >= 0 and nu_margin >= 0
            passed = passed and ok
            min_margin = min(min_margin, doubling_margin, nu_margin)
            rows.append({"m": m, "n_m": n_m, "doubling_margin": doubling_margin, "ok": ok})
        if cfg.variant == "bounded":
            d = cfg.delay_bound
            capped = min(m * d, schedule_nm_known(cfg, m))
            if d > 0 and capped == m * d and n_m == capped:
                block_margin = nu - d
                ok = block_margin >= 0
                passed = passed and ok
                min_margin = min(min_margin, block_margin)
                rows.append({"m": m, "d_branch_binding": True, "nu": nu, "block_margin": block_margin, "ok": ok})
        prev = n_m
    return CheckResult(
        name=f"schedule[{_cfg_tag(cfg)}]",
        passed=passed,
        margin=min_margin if rows else math.inf,
        details={"m_limit": m_limit, "rows": rows},
    )


def schedule_nm_known(cfg: OdaafConfig, m: int) -> int:
    """Known-expectation count for the same horizon/mean; the bounded
    variant's d-branch cap."""
    from .policies import _known_expectation_nm

    return _known_expectation_nm(cfg.horizon, cfg.mean_delay, m)


# -- Monte-Carlo plumbing -------------------------------------------------------


def _trace_task(args):
    instance, spec, master_seed, r = args
    result = run_replication_full(
        spec, instance, replication_seed(master_seed, r), checkpoints=np.asarray([instance.horizon])
    )
    trace = result.trace
    rows = [(rec.m, arm, rec.means[arm], arm in rec.eliminated, rec.n_m) for rec in trace.records for arm in rec.means]
    return rows, trace.eliminations(), trace.committed_arm


def _collect_traces(instance, spec, reps, master_seed, workers):
    tasks = [(instance, spec, master_seed, r) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_trace_task, tasks, chunksize=8))
    return [_trace_task(t) for t in tasks]


# -- corruption bound -----------------------------------------------------------


def check_corruption_bound(
    instance: BanditInstance,
    variant: str = "known-expectation",
    reps: int = 1000,
    master_seed: int = 0,
    workers: int = 1,
    min_samples: int = 100,
    stderr_slack: float = 4.0,
) -> CheckResult:
    """Bias of the per-phase mean estimates vs m * E[tau] / n_m.

    Pairs (phase, arm) observed in fewer than ``min_samples`` replications
    are reported as inconclusive rather than failed.
    """
    spec = PolicySpec(kind="odaaf", label="odaaf", variant=variant)
    results = _collect_traces(instance, spec, reps, master_seed, workers)
    mean_delay = instance.delay.moments().mean
    samples: Dict[Tuple[int, int], List[float]] = {}
    n_of_phase: Dict[int, int] = {}
    for rows, _elims, _committed in results:
        for m, arm, xbar, _elim, n_m in rows:
            samples.setdefault((m, arm), []).append(xbar)
            n_of_phase[m] = n_m
    rows_out = []
    inconclusive = []
    passed = True
    min_margin = math.inf
    for (m, arm), values in sorted(samples.items()):
        if len(values) < min_samples:
            inconclusive.append({"m": m, "arm": arm, "samples": len(values)})
            continue
        arr = np.asarray(values)
        bias = abs(float(arr.mean()) - instance.arm_means[arm])
        stderr = float(arr.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        bound = m * mean_delay / n_of_phase[m] + stderr_slack * stderr
        margin = bound - bias
        ok = margin >= 0
        passed = passed and ok
        min_margin = min(min_margin, margin)
        rows_out.append(
            {"m": m, "arm": arm, "samples": len(values), "bias": bias, "bound": bound, "margin": margin, "ok": ok}
        )
    return CheckResult(
        name=f"corruption[{variant},reps={reps}]",
        passed=passed,
        margin=min_margin if rows_out else math.inf,
        details={"pairs": rows_out, "inconclusive": inconclusive},
    )


# -- elimination timing -----------------------------------------------------------


def elimination_target_phase(gap: float) -> int:
    """First phase whose tolerance falls strictly below gap/2."""
    if not gap > 0:
        raise ConfigurationError("elimination timing needs a positive gap")
    m = 1
    while 2.0 ** -m >= gap / 2.0:
        m += 1
    return m


def check_elimination_timing(
    instance: BanditInstance,
    variant: str = "known-expectation",
    reps: int = 200,
    master_seed: int = 0,
    workers: int = 1,
    elimination_rate: float = 0.95,
    survival_rate: float = 0.99,
) -> CheckResult:
    """Two-arm check: the suboptimal arm is gone by phase m_j in >= 95% of
    replications and the optimal arm is never eliminated in >= 99%."""
    if instance.n_arms != 2:
        raise ConfigurationError("elimination timing check expects a two-arm instance")
    gap = max(instance.gaps)
    target = elimination_target_phase(gap)
    best = instance.best_arm
    suboptimal = 1 - best
    spec = PolicySpec(kind="odaaf", label="odaaf", variant=variant)
    results = _collect_traces(instance, spec, reps, master_seed, workers)
    on_time = 0
    optimal_survived = 0
    for _rows, elims, _committed in results:
        if suboptimal in elims and elims[suboptimal] <= target:
            on_time += 1
        if best not in elims:
            optimal_survived += 1
    frac_on_time = on_time / reps
    frac_survived = optimal_survived / reps
    passed = frac_on_time >= elimination_rate and frac_survived >= survival_rate
    return CheckResult(
        name=f"elimination[{variant},reps={reps}]",
        passed=passed,
        margin=min(frac_on_time - elimination_rate, frac_survived - survival_rate),
        details={
            "target_phase": target,
            "eliminated_on_time": frac_on_time,
            "optimal_survived": frac_survived,
        },
    )


# -- suites -----------------------------------------------------------------------


def _cfg_tag(cfg: OdaafConfig) -> str:
    bits = [cfg.variant, f"T={cfg.horizon}", f"E={cfg.mean_delay:g}"]
    if cfg.variant in ("bounded", "naive-bounded"):
        bits.append(f"d={cfg.delay_bound}")
    if cfg.variant == "variance":
        bits.append(f"V={cfg.delay_variance:g}")
        if cfg.use_variance_over_mean:
            bits.append("V/E")
    return ",".join(bits)


def arithmetic_matrix() -> List[OdaafConfig]:
    """The (variant, T, E, d, V) grid used by the widths/schedule suites."""
    horizons = (10_000, 250_000)
    mean_delays = (0.0, 5.0, 50.0)
    bounds = (0, 100)
    variances = (0.0, 850.0, 2500.0)
    configs = []
    for horizon in horizons:
        for mean_delay in mean_delays:
            configs.append(OdaafConfig("known-expectation", horizon, mean_delay))
            for d in bounds:
                configs.append(OdaafConfig("bounded", horizon, mean_delay, delay_bound=d))
                configs.append(OdaafConfig("naive-bounded", horizon, mean_delay, delay_bound=d))
            for v in variances:
                configs.append(OdaafConfig("variance", horizon, mean_delay, delay_variance=v))
                if mean_delay >= 1.0:
                    configs.append(
                        OdaafConfig(
                            "variance", horizon, mean_delay, delay_variance=v, use_variance_over_mean=True
                        )
                    )
    # a bounded case whose d-branch actually binds (d between the two base forms)
    configs.append(OdaafConfig("bounded", 250_000, 50.0, delay_bound=1200))
    return configs


def benchmark_instance(delay: DelayModel, horizon: int = 250_000) -> BanditInstance:
    """Two Bernoulli arms (0.5, 0.6): the benchmark instance."""
    return BanditInstance((0.5, 0.6), delay, horizon)


def run_suite(name: str, workers: int = 1, master_seed: int = 0, reps: Optional[int] = None) -> SuiteReport:
    if name == "all":
        checks = []
        for sub in ("widths", "schedule", "corruption", "elimination"):
            checks.extend(run_suite(sub, workers=workers, master_seed=master_seed, reps=reps).checks)
        return SuiteReport(suite="all", checks=checks)
    if name == "widths":
        return SuiteReport(suite=name, checks=[check_width_inequality(cfg) for cfg in arithmetic_matrix()])
    if name == "schedule":
        return SuiteReport(suite=name, checks=[check_schedule_facts(cfg) for cfg in arithmetic_matrix()])
    if name == "corruption":
        instance = benchmark_instance(DelayModel.uniform_int(100))
        return SuiteReport(
            suite=name,
            checks=[
                check_corruption_bound(
                    instance, reps=reps or 1000, master_seed=master_seed, workers=workers
                )
            ],
        )
    if name == "elimination":
        instance = benchmark_instance(DelayModel.constant(50))
        return SuiteReport(
            suite=name,
            checks=[
                check_elimination_timing(
                    instance, reps=reps or 200, master_seed=master_seed, workers=workers
                )
            ],
        )
    raise ConfigurationError(f"unknown validation suite {name!r}; choose from {SUITE_NAMES}")
