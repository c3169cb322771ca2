"""Seeded replication runner and experiment aggregation.

Replications are embarrassingly parallel: each (policy, replication) pair is
seeded independently of scheduling via ``SeedSequence((master_seed, r))``,
so summaries are identical for any worker count.  Policies run against
common random numbers: replication r of every policy sees the same
environment stream.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import backend
from .env import BanditInstance, EnvState, RegretTrajectory
from .errors import ConfigurationError
from .policies import (
    OdaafConfig,
    OdaafPolicy,
    PhaseRecord,
    PhaseTrace,
    QpmdPolicy,
    Ucb1Policy,
    full_schedule,
)

POLICY_KINDS = ("odaaf", "ucb1", "qpmd")


@dataclass(frozen=True)
class PolicySpec:
    """Declarative policy description, resolvable against any instance.

    For ODAAF entries, delay parameters left as ``None`` are filled from the
    instance's exact delay moments at build time; set them explicitly to
    model the "known upper bound" regime instead.
    """

    kind: str
    label: str
    variant: Optional[str] = None
    mean_delay: Optional[float] = None
    delay_bound: Optional[int] = None
    delay_variance: Optional[float] = None
    use_variance_over_mean: bool = False
    bridge_enabled: Optional[bool] = None
    bridge_arm_rule: str = "leader"
    schedule_override: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigurationError(f"unknown policy kind {self.kind!r}")
        if self.kind == "odaaf" and self.variant is None:
            raise ConfigurationError("odaaf policies need a variant")

    def odaaf_config(self, instance: BanditInstance) -> OdaafConfig:
        moments = instance.delay.moments()
        return OdaafConfig(
            variant=self.variant,
            horizon=instance.horizon,
            mean_delay=self.mean_delay if self.mean_delay is not None else moments.mean,
            delay_bound=self.delay_bound if self.delay_bound is not None else moments.bound,
            delay_variance=(
                self.delay_variance if self.delay_variance is not None else moments.variance
            ),
            use_variance_over_mean=self.use_variance_over_mean,
            bridge_enabled=self.bridge_enabled,
            bridge_arm_rule=self.bridge_arm_rule,
            schedule_override=self.schedule_override,
        )

    def build(self, instance: BanditInstance):
        if self.kind == "odaaf":
            return OdaafPolicy(self.odaaf_config(instance), instance.n_arms)
        if self.kind == "ucb1":
            return Ucb1Policy(instance.n_arms)
        return QpmdPolicy(instance.n_arms)


def odaaf_spec(instance: BanditInstance, variant: str, label: Optional[str] = None, **kwargs) -> PolicySpec:
    """Convenience constructor used by presets and tests."""
    return PolicySpec(kind="odaaf", label=label or f"odaaf-{variant}", variant=variant, **kwargs)


def default_checkpoints(horizon: int, stride: Optional[int] = None) -> np.ndarray:
    """Checkpoint rounds: stride, 2*stride, ..., always including the horizon."""
    if stride is None:
        stride = max(1, horizon // 500)
    if stride < 1:
        raise ConfigurationError("checkpoint stride must be >= 1")
    points = list(range(stride, horizon + 1, stride))
    if not points or points[-1] != horizon:
        points.append(horizon)
    return np.asarray(points, dtype=np.int64)


@dataclass
class ReplicationResult:
    """Trajectory plus the optional extras a single replication can report."""

    trajectory: RegretTrajectory
    arms: Optional[np.ndarray] = None
    trace: Optional[PhaseTrace] = None
    generated: float = 0.0
    observed: float = 0.0
    pending: float = 0.0
    sim_rounds: int = 0


def run_replication(
    policy,
    instance: BanditInstance,
    seed,
    checkpoints: Optional[np.ndarray] = None,
) -> RegretTrajectory:
    """One seeded replication of (policy x environment) -> regret trajectory.

    ``policy`` is a :class:`PolicySpec` (fast path eligible) or an already
    constructed policy object (always the generic loop).
    """
    return run_replication_full(policy, instance, seed, checkpoints).trajectory


def run_replication_full(
    policy,
    instance: BanditInstance,
    seed,
    checkpoints: Optional[np.ndarray] = None,
    record_arms: bool = False,
    use_backend: Optional[str] = None,
) -> ReplicationResult:
    if checkpoints is None:
        checkpoints = default_checkpoints(instance.horizon)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    seed_id = seed if isinstance(seed, int) else getattr(seed, "entropy", 0)

    kernels = backend.kernels if use_backend != "python" else None
    if use_backend == "compiled" and kernels is None:
        raise ConfigurationError("compiled backend requested but unavailable")
    if kernels is not None and isinstance(policy, PolicySpec):
        return _kernel_replication(kernels, policy, instance, seed, seed_id, checkpoints, record_arms)

    if isinstance(policy, PolicySpec):
        policy = policy.build(instance)
    return _python_replication(policy, instance, seed, seed_id, checkpoints, record_arms)


def _python_replication(policy, instance, seed, seed_id, checkpoints, record_arms) -> ReplicationResult:
    env = EnvState(instance, seed)
    horizon = instance.horizon
    gaps = instance.gaps
    labeled = policy.feedback_mode == "labeled"
    n_ckpt = len(checkpoints)
    out = np.empty(n_ckpt, dtype=np.float64)
    arms = np.zeros(horizon + 1, dtype=np.int32) if record_arms else None
    regret = 0.0
    ci = 0
    t = 0
    while t < horizon:
        if getattr(policy, "committed_arm", None) is not None:
            break
        t += 1
        arm = policy.select(t)
        feedback = env.step_labeled(arm) if labeled else env.step(arm)
        regret += gaps[arm]
        if record_arms:
            arms[t] = arm
        while ci < n_ckpt and checkpoints[ci] == t:
            out[ci] = regret
            ci += 1
        policy.observe(t, feedback)
    committed = getattr(policy, "committed_arm", None)
    if committed is not None:
        # exact tail: every remaining round plays the committed arm
        g = gaps[committed]
        while ci < n_ckpt:
            out[ci] = regret + g * (int(checkpoints[ci]) - t)
            ci += 1
        final = regret + g * (horizon - t)
        if record_arms:
            arms[t + 1 :] = committed
    else:
        final = regret
    trajectory = RegretTrajectory(
        seed=seed_id,
        checkpoints=list(zip((int(c) for c in checkpoints), out.tolist())),
        final_regret=final,
    )
    return ReplicationResult(
        trajectory=trajectory,
        arms=arms,
        trace=getattr(policy, "trace", None),
        generated=env.generated_total,
        observed=env.observed_total,
        pending=env.pending_mass(),
        sim_rounds=t,
    )


def _kernel_replication(kernels, spec, instance, seed, seed_id, checkpoints, record_arms) -> ReplicationResult:
    means = np.asarray(instance.arm_means, dtype=np.float64)
    gaps = np.asarray(instance.gaps, dtype=np.float64)
    kind_code, da, db = instance.delay.kernel_code()
    bit_generator = np.random.PCG64(seed)
    if spec.kind == "odaaf":
        cfg = spec.odaaf_config(instance)
        schedule = np.asarray(full_schedule(cfg), dtype=np.int64)
        raw = kernels.odaaf_replication(
            means,
            gaps,
            kind_code,
            da,
            db,
            instance.horizon,
            bit_generator,
            schedule,
            cfg.bridge_enabled,
            cfg.bridge_arm_rule == "leader",
            checkpoints,
            record_arms,
        )
        trace = _trace_from_kernel(raw["trace"], schedule)
    elif spec.kind == "ucb1":
        raw = kernels.ucb1_replication(
            means, gaps, kind_code, da, db, instance.horizon, bit_generator, checkpoints, record_arms
        )
        trace = None
    else:
        raw = kernels.qpmd_replication(
            means, gaps, kind_code, da, db, instance.horizon, bit_generator, checkpoints, record_arms
        )
        trace = None
    trajectory = RegretTrajectory(
        seed=seed_id,
        checkpoints=list(zip((int(c) for c in checkpoints), raw["checkpoint_regret"].tolist())),
        final_regret=float(raw["final_regret"]),
    )
    return ReplicationResult(
        trajectory=trajectory,
        arms=raw["arms"],
        trace=trace,
        generated=float(raw["generated"]),
        observed=float(raw["observed"]),
        pending=float(raw["pending"]),
        sim_rounds=int(raw["sim_rounds"]),
    )


def _trace_from_kernel(kt, schedule) -> PhaseTrace:
    records: List[PhaseRecord] = []
    row_m = kt["row_m"]
    n_phases = len(kt["ph_m"])
    row_idx = 0
    for p in range(n_phases):
        m = int(kt["ph_m"][p])
        blocks: Dict[int, Tuple[int, int]] = {}
        means: Dict[int, float] = {}
        eliminated: List[int] = []
        while row_idx < len(row_m) and int(row_m[row_idx]) == m:
            arm = int(kt["row_arm"][row_idx])
            blocks[arm] = (int(kt["row_block_start"][row_idx]), int(kt["row_block_end"][row_idx]))
            means[arm] = float(kt["row_xbar"][row_idx])
            if kt["row_elim"][row_idx]:
                eliminated.append(arm)
            row_idx += 1
        bridge_arm = int(kt["ph_bridge_arm"][p])
        bridge = None
        if bridge_arm >= 0 and kt["ph_bridge_start"][p] > 0:
            bridge = (bridge_arm, int(kt["ph_bridge_start"][p]), int(kt["ph_bridge_end"][p]))
        records.append(
            PhaseRecord(
                m=m,
                n_m=int(kt["ph_nm"][p]),
                start=int(kt["ph_start"][p]),
                end=int(kt["ph_end"][p]),
                blocks=blocks,
                means=means,
                eliminated=tuple(eliminated),
                bridge=bridge,
            )
        )
    committed = int(kt["committed_arm"])
    commit_round = int(kt["commit_round"])
    return PhaseTrace(
        records=records,
        committed_arm=committed if committed >= 0 else None,
        commit_round=commit_round if commit_round >= 0 else None,
    )


# -- experiments -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    instance: BanditInstance
    policies: Tuple[PolicySpec, ...]
    replications: int
    master_seed: int
    checkpoint_stride: Optional[int] = None
    workers: int = 1
    ratio_pairs: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate policy labels: {labels}")
        for a, b in self.ratio_pairs:
            if a not in labels or b not in labels:
                raise ConfigurationError(f"ratio pair ({a}, {b}) references unknown policy labels")


@dataclass
class ExperimentSummary:
    checkpoints: np.ndarray
    labels: List[str]
    trajectories: Dict[str, np.ndarray]  # (replications, checkpoints)
    mean: Dict[str, np.ndarray]
    stderr: Dict[str, np.ndarray]
    final_mean: Dict[str, float]
    ratio_pairs: List[Tuple[str, str]]
    ratios: Dict[Tuple[str, str], np.ndarray]  # NaN where undefined
    master_seed: int = 0
    replications: int = 0
    config_digest: str = ""
    wall_time: float = 0.0


def replication_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    """Distinct entropy per (master seed, replication): collision-free mix."""
    return np.random.SeedSequence((master_seed, r))


def _config_fingerprint(cfg: ExperimentConfig) -> str:
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _experiment_task(args) -> Tuple[int, int, list, float]:
    cfg, policy_index, r = args
    checkpoints = default_checkpoints(cfg.instance.horizon, cfg.checkpoint_stride)
    seed = replication_seed(cfg.master_seed, r)
    result = run_replication_full(cfg.policies[policy_index], cfg.instance, seed, checkpoints)
    values = [v for _, v in result.trajectory.checkpoints]
    return policy_index, r, values, result.trajectory.final_regret


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """R seeded replications per policy, aggregated into mean/stderr bands.

    The result is independent of ``cfg.workers`` and of task scheduling.
    """
    start = time.perf_counter()
    checkpoints = default_checkpoints(cfg.instance.horizon, cfg.checkpoint_stride)
    n_ckpt = len(checkpoints)
    tasks = [(cfg, pi, r) for pi in range(len(cfg.policies)) for r in range(cfg.replications)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw = list(pool.map(_experiment_task, tasks, chunksize=1))
    else:
        raw = [_experiment_task(t) for t in tasks]

    labels = [p.label for p in cfg.policies]
    trajectories = {label: np.zeros((cfg.replications, n_ckpt)) for label in labels}
    for policy_index, r, values, _final in raw:
        trajectories[labels[policy_index]][r, :] = values

    mean = {label: traj.mean(axis=0) for label, traj in trajectories.items()}
    if cfg.replications > 1:
        stderr = {
            label: traj.std(axis=0, ddof=1) / np.sqrt(cfg.replications)
            for label, traj in trajectories.items()
        }
    else:
        stderr = {label: np.zeros(n_ckpt) for label in labels}
    final_mean = {label: float(mean[label][-1]) for label in labels}

    ratios = {}
    for a, b in cfg.ratio_pairs:
        with np.errstate(divide="ignore", invalid="ignore"):
            series = np.where(mean[b] > 0.0, mean[a] / mean[b], np.nan)
        ratios[(a, b)] = series

    return ExperimentSummary(
        checkpoints=checkpoints,
        labels=labels,
        trajectories=trajectories,
        mean=mean,
        stderr=stderr,
        final_mean=final_mean,
        ratio_pairs=list(cfg.ratio_pairs),
        ratios=ratios,
        master_seed=cfg.master_seed,
        replications=cfg.replications,
        config_digest=_config_fingerprint(cfg),
        wall_time=time.perf_counter() - start,
    )


def ratio_series(checkpoints: Sequence[int], a: Sequence[float], b: Sequence[float]) -> List[Tuple[int, float]]:
    """Pointwise a/b over shared checkpoints; points with b <= 0 are skipped."""
    if len(a) != len(b) or len(a) != len(checkpoints):
        raise ValueError("ratio_series needs equal-length series on shared checkpoints")
    out = []
    for t, av, bv in zip(checkpoints, a, b):
        if bv > 0.0:
            out.append((int(t), av / bv))
    return out


# -- mean-delay sweep --------------------------------------------------------


@dataclass
class SweepPoint:
    mu0: float
    mean_delay: float
    final_mean: float
    final_stderr: float
    ratio: float


@dataclass
class SweepResult:
    means: List[float]
    points: Dict[str, List[SweepPoint]]  # per policy label
    master_seed: int
    replications: int


def _instance_with_delay_location(instance: BanditInstance, mu0: float) -> BanditInstance:
    delay = instance.delay
    if delay.kind == "discretized-truncated-normal":
        new_delay = dataclasses.replace(delay, params=(float(mu0), delay.params[1]))
    elif delay.kind == "constant":
        new_delay = dataclasses.replace(delay, params=(int(mu0),))
    else:
        raise ConfigurationError(
            f"mean-delay sweep needs a location-parameter delay family, got {delay.kind!r}"
        )
    return dataclasses.replace(instance, delay=new_delay)


def mean_delay_sweep(cfg: ExperimentConfig, mus: Sequence[float]) -> SweepResult:
    """Rerun the experiment for each delay location; report final regret
    relative to the first listed location (the zero-mean baseline in the
    standard setup)."""
    if not mus:
        raise ConfigurationError("sweep needs at least one mean")
    points: Dict[str, List[SweepPoint]] = {p.label: [] for p in cfg.policies}
    baselines: Dict[str, float] = {}
    for mu0 in mus:
        sub_instance = _instance_with_delay_location(cfg.instance, mu0)
        sub_cfg = dataclasses.replace(cfg, instance=sub_instance)
        summary = run_experiment(sub_cfg)
        for label in summary.labels:
            final = summary.final_mean[label]
            if label not in baselines:
                baselines[label] = final
            base = baselines[label]
            points[label].append(
                SweepPoint(
                    mu0=float(mu0),
                    mean_delay=sub_instance.delay.moments().mean,
                    final_mean=final,
                    final_stderr=float(summary.stderr[label][-1]),
                    ratio=final / base if base > 0 else float("nan"),
                )
            )
    return SweepResult(
        means=[float(m) for m in mus],
        points=points,
        master_seed=cfg.master_seed,
        replications=cfg.replications,
    )
