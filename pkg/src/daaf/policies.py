"""Bandit policies: phase-based elimination (four schedule variants) plus
UCB1 and queue-based QPM-D baselines.

All policies share one interface: ``select(t) -> arm`` then
``observe(t, feedback)`` once the round's feedback arrives.  ``feedback`` is
the aggregated scalar for ``feedback_mode == "aggregated"`` policies and a
list of (arm, reward) arrivals for ``"labeled"`` ones.  Policies are
deterministic; every random draw lives in the environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ConfigurationError, ScheduleExhausted

VARIANTS = ("known-expectation", "bounded", "variance", "naive-bounded")

# Variants that discard a bridge block between phases by default.  The
# known-expectation analysis does not need the bridge, and the naive bounded
# schedule is a plain Improved-UCB-style construction without one.
_BRIDGE_DEFAULTS = {
    "known-expectation": False,
    "bounded": True,
    "variance": True,
    "naive-bounded": False,
}


@dataclass(frozen=True)
class OdaafConfig:
    """Configuration of one elimination policy run.

    ``mean_delay`` (and, per variant, ``delay_bound`` / ``delay_variance``)
    may be the exact delay moments or any known upper bound on them.
    """

    variant: str
    horizon: int
    mean_delay: float
    delay_bound: Optional[int] = None
    delay_variance: Optional[float] = None
    use_variance_over_mean: bool = False
    bridge_enabled: Optional[bool] = None
    bridge_arm_rule: str = "leader"
    # Explicit cumulative sample targets, overriding the formula schedule.
    # Intended for unit tests and ablations.
    schedule_override: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        if self.mean_delay < 0:
            raise ConfigurationError("mean_delay must be nonnegative")
        if self.variant in ("bounded", "naive-bounded"):
            if self.delay_bound is None or self.delay_bound < 0:
                raise ConfigurationError(f"variant {self.variant!r} needs a nonnegative delay_bound")
        if self.variant == "variance":
            if self.delay_variance is None or self.delay_variance < 0:
                raise ConfigurationError("variance variant needs a nonnegative delay_variance")
        if self.bridge_arm_rule not in ("leader", "lowest-index"):
            raise ConfigurationError(f"unknown bridge_arm_rule {self.bridge_arm_rule!r}")
        if self.bridge_enabled is None:
            object.__setattr__(self, "bridge_enabled", _BRIDGE_DEFAULTS[self.variant])


def _log_term(horizon: int, tolerance: float) -> float:
    arg = horizon * tolerance * tolerance
    if arg <= 1.0:
        raise ScheduleExhausted(
            f"sample schedule undefined: horizon * tolerance^2 = {arg} <= 1"
        )
    return math.log(arg)


def _known_expectation_nm(horizon: int, mean_delay: float, m: int) -> int:
    tol = 2.0 ** -m
    log_t = _log_term(horizon, tol)
    inner = 2.0 * log_t + (8.0 / 3.0) * tol * log_t + 6.0 * tol * m * mean_delay
    root = math.sqrt(2.0 * log_t) + math.sqrt(inner)
    return math.ceil(root * root / (tol * tol))


def schedule_nm(cfg: OdaafConfig, m: int) -> int:
    """Cumulative per-arm sample target n_m for phase ``m`` (1-based).

    Natural logs, 64-bit arithmetic, ceiling applied last.  Raises
    :class:`ScheduleExhausted` once ``horizon * tolerance^2 <= 1``.
    """
    if m < 1:
        raise ValueError("phase index starts at 1")
    tol = 2.0 ** -m
    variant = cfg.variant
    if variant == "known-expectation":
        return _known_expectation_nm(cfg.horizon, cfg.mean_delay, m)
    log_t = _log_term(cfg.horizon, tol)
    if variant == "bounded":
        inner = 2.0 * log_t + (8.0 / 3.0) * tol * log_t + 4.0 * tol * cfg.mean_delay
        root = math.sqrt(2.0 * log_t) + math.sqrt(inner)
        base = math.ceil(root * root / (tol * tol))
        # m * min(d, n_gen/m), kept in exact integer arithmetic
        capped = min(m * cfg.delay_bound, _known_expectation_nm(cfg.horizon, cfg.mean_delay, m))
        return max(capped, base)
    if variant == "variance":
        var_term = cfg.delay_variance
        if cfg.use_variance_over_mean and cfg.mean_delay >= 1.0:
            var_term = cfg.delay_variance / cfg.mean_delay
        inner = 2.0 * log_t + (8.0 / 3.0) * tol * log_t + 4.0 * tol * (cfg.mean_delay + 2.0 * var_term)
        root = math.sqrt(2.0 * log_t) + math.sqrt(inner)
        return math.ceil(root * root / (tol * tol))
    # naive-bounded
    root = math.sqrt(log_t) + math.sqrt(log_t + 4.0 * tol * m * cfg.delay_bound)
    return math.ceil(root * root / (2.0 * tol * tol))


@lru_cache(maxsize=None)
def full_schedule(cfg: OdaafConfig) -> Tuple[int, ...]:
    """All usable n_m values, in phase order.

    The formula schedules are cut at the first phase whose count fails to
    strictly increase: past the maximal round count of about
    half log2(horizon/4) the log term collapses and the closed forms can
    shrink, which would demand a negative number of new plays.  Reaching
    the end of the table is treated as schedule exhaustion.
    """
    if cfg.schedule_override is not None:
        sched = tuple(int(n) for n in cfg.schedule_override)
        prev = 0
        for n in sched:
            if n <= prev:
                raise ConfigurationError(f"sample schedule must be strictly increasing, got {sched}")
            prev = n
        return sched
    out: List[int] = []
    m = 1
    while True:
        try:
            n = schedule_nm(cfg, m)
        except ScheduleExhausted:
            break
        if out and n <= out[-1]:
            break
        out.append(n)
        m += 1
    return tuple(out)


def max_feasible_phase(horizon: int) -> int:
    """Largest m with horizon * 4^-m > 1."""
    m = 0
    while horizon * 4.0 ** -(m + 1) > 1.0:
        m += 1
    return m


# -- elimination ---------------------------------------------------------


def eliminate_arms(xbars: Dict[int, float], tolerance: float) -> Tuple[List[int], List[int], int]:
    """Apply the elimination rule to one phase's means.

    Returns (survivors, eliminated, leader).  An arm goes when its mean plus
    the tolerance is strictly below the best mean; the leader (first argmax
    in index order) therefore always survives.
    """
    leader = -1
    best = -math.inf
    for j, xb in xbars.items():
        if xb > best:
            best = xb
            leader = j
    survivors, eliminated = [], []
    for j, xb in xbars.items():
        if xb + tolerance < best:
            eliminated.append(j)
        else:
            survivors.append(j)
    return survivors, eliminated, leader


@dataclass
class PhaseRecord:
    """Bookkeeping for one completed phase (plus its trailing bridge)."""

    m: int
    n_m: int
    start: int
    end: int
    blocks: Dict[int, Tuple[int, int]]
    means: Dict[int, float]
    eliminated: Tuple[int, ...]
    bridge: Optional[Tuple[int, int, int]] = None  # (arm, first, last)


@dataclass
class PhaseTrace:
    records: List[PhaseRecord] = field(default_factory=list)
    committed_arm: Optional[int] = None
    commit_round: Optional[int] = None

    def eliminations(self) -> Dict[int, int]:
        """Arm -> phase in which it was eliminated."""
        out: Dict[int, int] = {}
        for rec in self.records:
            for j in rec.eliminated:
                out[j] = rec.m
        return out


class OdaafPolicy:
    """Phase-based elimination with delayed, aggregated anonymous feedback.

    Plays the active arms in ascending index order for ``n_m - n_{m-1}``
    rounds each, eliminates at phase ends, halves the tolerance, optionally
    plays a discarded bridge block, and commits to the empirical best arm
    once a single arm survives or the schedule is exhausted.
    """

    feedback_mode = "aggregated"

    def __init__(self, config: OdaafConfig, n_arms: int):
        self.config = config
        self.n_arms = n_arms
        self.schedule = full_schedule(config)
        self.m = 1
        self.tolerance = 0.5
        self.active: List[int] = list(range(n_arms))
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms
        self.trace = PhaseTrace()
        self.committed_arm: Optional[int] = None
        self.bridge_arm: Optional[int] = None
        self._mode = "play"
        self._pos = 0
        self._nu = self.schedule[0] if self.schedule else 0
        self._left = self._nu
        self._bridge_left = 0
        self._phase_start_t: Optional[int] = None
        self._block_start_t: Optional[int] = None
        self._blocks: Dict[int, Tuple[int, int]] = {}
        if not self.schedule:
            # Horizon too small for even one phase; nothing to learn from.
            self._commit(0, 0)

    # -- policy interface ------------------------------------------------

    def select(self, t: int) -> int:
        if t > self.config.horizon:
            raise ValueError(f"select({t}) called past the horizon {self.config.horizon}")
        if self._mode == "commit":
            return self.committed_arm
        if self._mode == "bridge":
            return self.bridge_arm
        return self.active[self._pos]

    def observe(self, t: int, x: float) -> None:
        if x < 0:
            raise ValueError(f"negative observation {x!r}")
        if self._mode == "commit":
            return
        if self._mode == "bridge":
            rec = self.trace.records[-1]
            arm = self.bridge_arm
            rec.bridge = (arm, t if rec.bridge is None else rec.bridge[1], t)
            rec.end = t
            self._bridge_left -= 1
            if self._bridge_left == 0:
                self._mode = "play"
            return
        arm = self.active[self._pos]
        if self._phase_start_t is None:
            self._phase_start_t = t
        if self._block_start_t is None:
            self._block_start_t = t
        self.sums[arm] += x
        self.counts[arm] += 1
        self._left -= 1
        if self._left == 0:
            self._blocks[arm] = (self._block_start_t, t)
            self._block_start_t = None
            self._pos += 1
            if self._pos < len(self.active):
                self._left = self._nu
            else:
                self.phase_end(t)

    # -- phase machinery --------------------------------------------------

    def phase_end(self, t: int) -> Tuple[int, ...]:
        """Eliminate, halve the tolerance, and set up the next phase.

        Returns the eliminated arms.  Called by ``observe`` when every
        active arm has reached the phase's sample target; partial phases cut
        off by the horizon never reach this point, so they never eliminate.
        """
        n_m = self.schedule[self.m - 1]
        xbars = {j: self.sums[j] / n_m for j in self.active}
        survivors, eliminated, leader = eliminate_arms(xbars, self.tolerance)
        self.trace.records.append(
            PhaseRecord(
                m=self.m,
                n_m=n_m,
                start=self._phase_start_t,
                end=t,
                blocks=dict(self._blocks),
                means=xbars,
                eliminated=tuple(eliminated),
            )
        )
        self._blocks = {}
        self._phase_start_t = None
        old_nu = self._nu
        self.tolerance *= 0.5
        self.m += 1
        self.active = survivors
        if len(survivors) == 1 or self.m > len(self.schedule):
            self._commit(leader, t)
            return tuple(eliminated)
        n_next = self.schedule[self.m - 1]
        self._nu = n_next - n_m
        self._pos = 0
        self._left = self._nu
        if self.config.bridge_enabled and old_nu > 0:
            if self.config.bridge_arm_rule == "leader":
                self.bridge_arm = leader
            else:
                self.bridge_arm = min(survivors)
            self._bridge_left = old_nu
            self._mode = "bridge"
        return tuple(eliminated)

    def _commit(self, arm: int, t: int) -> None:
        self._mode = "commit"
        self.committed_arm = arm
        self.trace.committed_arm = arm
        self.trace.commit_round = t


# -- baselines -------------------------------------------------------------


def ucb1_policy(t: int, counts: Sequence[int], means: Sequence[float]) -> int:
    """UCB1 index rule: unplayed arms first, then argmax of
    ``mean + sqrt(2 ln t / count)``, ties to the lowest index."""
    if t < 1:
        raise ValueError("t starts at 1")
    for j, c in enumerate(counts):
        if c == 0:
            return j
    best = -math.inf
    best_j = 0
    for j, c in enumerate(counts):
        index = means[j] + math.sqrt(2.0 * math.log(t) / c)
        if index > best:
            best = index
            best_j = j
    return best_j


class Ucb1Policy:
    """Plain UCB1 crediting each round's aggregated observation to the arm
    played that round.  Exact UCB1 under zero delay; a naive-attribution
    baseline otherwise."""

    feedback_mode = "aggregated"

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms
        self._last: Optional[int] = None

    def select(self, t: int) -> int:
        means = [self.sums[j] / c if (c := self.counts[j]) else 0.0 for j in range(self.n_arms)]
        self._last = ucb1_policy(t, self.counts, means)
        return self._last

    def observe(self, t: int, x: float) -> None:
        self.counts[self._last] += 1
        self.sums[self._last] += x


class QpmdPolicy:
    """Queue-based baseline for labeled delayed feedback.

    Arrivals are buffered in per-arm FIFO queues.  While the base
    algorithm's desired arm has a queued reward, one reward is consumed,
    the base (UCB1 on its own sample clock) is updated and re-queried;
    the desired arm is then played, fed or not.
    """

    feedback_mode = "labeled"

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms
        self.base_steps = 0
        self.queues: List[List[float]] = [[] for _ in range(n_arms)]
        self._heads = [0] * n_arms
        self.desired = 0  # first unplayed arm

    def _queue_len(self, arm: int) -> int:
        return len(self.queues[arm]) - self._heads[arm]

    def select(self, t: int) -> int:
        return self.desired

    def observe(self, t: int, arrivals) -> None:
        for arm, reward in arrivals:
            self.queues[arm].append(reward)
        while self._queue_len(self.desired) > 0:
            arm = self.desired
            reward = self.queues[arm][self._heads[arm]]
            self._heads[arm] += 1
            self.counts[arm] += 1
            self.sums[arm] += reward
            self.base_steps += 1
            means = [self.sums[j] / c if (c := self.counts[j]) else 0.0 for j in range(self.n_arms)]
            self.desired = ucb1_policy(self.base_steps + 1, self.counts, means)
