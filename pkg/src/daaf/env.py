"""Reward/delay generation and anonymous aggregated observation delivery.

The environment owns the only RNG stream in a replication.  Each step draws
one Bernoulli reward for the played arm and one delay; the reward is
scheduled to arrive at the end of round ``t + tau`` and the step returns
whatever mass arrives at end of the current round.  Per-step draw order is
reward first, then delay; the compiled kernels replicate that order exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .delays import DelayModel
from .errors import ConfigurationError


@dataclass(frozen=True)
class BanditInstance:
    """Ground truth for a simulation: arm means, shared delay model, horizon."""

    arm_means: Tuple[float, ...]
    delay: DelayModel
    horizon: int

    def __post_init__(self):
        if len(self.arm_means) < 2:
            raise ConfigurationError("a bandit instance needs at least two arms")
        for mu in self.arm_means:
            if not 0.0 <= mu <= 1.0:
                raise ConfigurationError(f"arm mean {mu!r} outside [0, 1]")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon!r}")
        object.__setattr__(self, "arm_means", tuple(float(m) for m in self.arm_means))

    @property
    def n_arms(self) -> int:
        return len(self.arm_means)

    @property
    def best_mean(self) -> float:
        return max(self.arm_means)

    @property
    def best_arm(self) -> int:
        return max(range(self.n_arms), key=lambda j: (self.arm_means[j], -j))

    @property
    def gaps(self) -> Tuple[float, ...]:
        best = self.best_mean
        return tuple(best - mu for mu in self.arm_means)


def pseudo_regret_increment(instance: BanditInstance, arm: int) -> float:
    """Gap of ``arm``: the per-play pseudo-regret cost of pulling it."""
    if not 0 <= arm < instance.n_arms:
        raise IndexError(f"arm {arm} out of range for {instance.n_arms} arms")
    return instance.best_mean - instance.arm_means[arm]


def lai_robbins_constant(instance: BanditInstance) -> float:
    """Instance-dependent asymptotic slope of log-scaled regret.

    Sum over positive-gap arms of gap / KL(Bernoulli(mu_j), Bernoulli(mu*)).
    """
    best = instance.best_mean
    total = 0.0
    for mu in instance.arm_means:
        if mu < best:
            total += (best - mu) / bernoulli_kl(mu, best)
    return total


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), natural log."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"KL(p, q) undefined for q = {q!r}")
    kl = 0.0
    if p > 0.0:
        kl += p * math.log(p / q)
    if p < 1.0:
        kl += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return kl


@dataclass
class RegretTrajectory:
    """Checkpointed cumulative pseudo-regret of one seeded replication."""

    seed: int
    checkpoints: List[Tuple[int, float]]
    final_regret: float


class EnvState:
    """Mutable simulator state for one replication.

    The pending calendar maps an arrival round to the list of (arm, reward)
    pairs landing there, which serves both the aggregated and the labeled
    feedback modes.  Conservation holds exactly for Bernoulli rewards:
    ``generated_total == observed_total + pending_mass()`` after every step.
    """

    def __init__(self, instance: BanditInstance, seed):
        self.instance = instance
        self.seed = seed
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.clock = 0
        self.pending: dict[int, list[tuple[int, float]]] = {}
        self.generated_total = 0.0
        self.observed_total = 0.0

    def _generate(self, arm: int) -> int:
        """Draw this round's reward and delay, schedule the arrival.

        Returns the new clock value (the round just played).
        """
        inst = self.instance
        if not 0 <= arm < inst.n_arms:
            raise IndexError(f"arm {arm} out of range for {inst.n_arms} arms")
        next_u = self.rng.random
        reward = 1.0 if next_u() < inst.arm_means[arm] else 0.0
        tau = inst.delay.sample(next_u)
        self.clock += 1
        t = self.clock
        self.pending.setdefault(t + tau, []).append((arm, reward))
        self.generated_total += reward
        return t

    def step(self, arm: int) -> float:
        """Play ``arm``; return the aggregated anonymous observation X_t."""
        t = self._generate(arm)
        x = 0.0
        for _, reward in self.pending.pop(t, ()):
            x += reward
        self.observed_total += x
        return x

    def step_labeled(self, arm: int) -> List[Tuple[int, float]]:
        """Play ``arm``; return this round's arrivals with arm labels.

        Same draws and scheduling as :meth:`step`; the scalar sum of the
        returned rewards equals what ``step`` would have returned.
        """
        t = self._generate(arm)
        arrivals = self.pending.pop(t, [])
        for _, reward in arrivals:
            self.observed_total += reward
        return arrivals

    def pending_mass(self) -> float:
        return sum(r for arrivals in self.pending.values() for _, r in arrivals)


def new_environment(instance: BanditInstance, seed) -> EnvState:
    """Fresh environment at clock 0; equal seeds replay identically."""
    if not isinstance(instance, BanditInstance):
        raise ConfigurationError("instance must be a BanditInstance")
    return EnvState(instance, seed)
