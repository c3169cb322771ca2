"""Bandits with delayed, aggregated anonymous feedback: simulation library,
phase-based elimination policies, baselines, and a benchmark harness."""

from .backend import backend_name
from .delays import DelayModel, DelayMoments, delay_moments
from .env import (
    BanditInstance,
    EnvState,
    RegretTrajectory,
    bernoulli_kl,
    lai_robbins_constant,
    new_environment,
    pseudo_regret_increment,
)
from .errors import ConfigurationError, ScheduleExhausted
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    PolicySpec,
    default_checkpoints,
    mean_delay_sweep,
    ratio_series,
    run_experiment,
    run_replication,
    run_replication_full,
)
from .policies import (
    OdaafConfig,
    OdaafPolicy,
    PhaseRecord,
    PhaseTrace,
    QpmdPolicy,
    Ucb1Policy,
    eliminate_arms,
    full_schedule,
    max_feasible_phase,
    schedule_nm,
    ucb1_policy,
)

__version__ = "0.1.0"

__all__ = [
    "BanditInstance",
    "ConfigurationError",
    "DelayModel",
    "DelayMoments",
    "EnvState",
    "ExperimentConfig",
    "ExperimentSummary",
    "OdaafConfig",
    "OdaafPolicy",
    "PhaseRecord",
    "PhaseTrace",
    "PolicySpec",
    "QpmdPolicy",
    "RegretTrajectory",
    "ScheduleExhausted",
    "Ucb1Policy",
    "backend_name",
    "bernoulli_kl",
    "default_checkpoints",
    "delay_moments",
    "eliminate_arms",
    "full_schedule",
    "lai_robbins_constant",
    "max_feasible_phase",
    "mean_delay_sweep",
    "new_environment",
    "pseudo_regret_increment",
    "ratio_series",
    "run_experiment",
    "run_replication",
    "run_replication_full",
    "schedule_nm",
    "ucb1_policy",
]
