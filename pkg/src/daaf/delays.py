"""Discrete nonnegative delay distributions with exact single-draw sampling.

Every model samples from a stream of float64 uniforms in [0, 1) through a
fixed draw protocol (inverse CDF, or Box-Muller plus rejection for the
truncated normal).  The compiled kernels implement the byte-identical
protocol against the same bit stream, which is what makes the two backends
produce identical trajectories.  Do not change a formula here without
changing ``_kernels.pyx`` in lockstep.

Draw protocol (one call to ``next_u`` per line unless noted):

    constant(c)            no draw, tau = c
    uniform-int(d)         u;  tau = min(floor(u * (d + 1)), d)
    geometric(p)           u;  tau = floor(log1p(-u) / log1p(-p))   (0 if p >= 1)
    discretized-exponential(rate)
                           u;  tau = ceil(-log1p(-u) / rate)
    discretized-truncated-normal(mu, sigma)
                           repeat {u1, u2; x = mu + sigma * (sqrt(-2 log1p(-u1))
                           * cos(2 pi u2))} until x >= 0; tau = ceil(x)

Continuous draws are discretized by ceiling, so the support is always a
subset of {0, 1, 2, ...}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError

_TWO_PI = 6.283185307179586

KINDS = (
    "constant",
    "uniform-int",
    "geometric",
    "discretized-exponential",
    "discretized-truncated-normal",
)

# Integer codes shared with the compiled kernels.
KIND_CODES = {kind: i for i, kind in enumerate(KINDS)}

# Numeric summation for the discretized kinds stops once the residual tail
# probability drops below this; the resulting moment error is < 1e-9.
_TAIL_RESIDUAL = 1e-12


class DelayMoments(NamedTuple):
    mean: float
    variance: float
    bound: Optional[int]


@dataclass(frozen=True)
class DelayModel:
    """A delay distribution supported on the nonnegative integers.

    Use the classmethod constructors; ``params`` is a kind-specific tuple:
    ``("constant", (c,))``, ``("uniform-int", (d,))``, ``("geometric", (p,))``,
    ``("discretized-exponential", (rate,))``,
    ``("discretized-truncated-normal", (mu, sigma))``.
    """

    kind: str
    params: tuple

    @classmethod
    def constant(cls, c: int) -> "DelayModel":
        if c < 0 or int(c) != c:
            raise ConfigurationError(f"constant delay must be a nonnegative integer, got {c!r}")
        return cls("constant", (int(c),))

    @classmethod
    def uniform_int(cls, d: int) -> "DelayModel":
        if d < 0 or int(d) != d:
            raise ConfigurationError(f"uniform-int bound must be a nonnegative integer, got {d!r}")
        return cls("uniform-int", (int(d),))

    @classmethod
    def geometric(cls, p: float) -> "DelayModel":
        if not 0.0 < p <= 1.0:
            raise ConfigurationError(f"geometric parameter must lie in (0, 1], got {p!r}")
        return cls("geometric", (float(p),))

    @classmethod
    def discretized_exponential(cls, rate: float) -> "DelayModel":
        if not rate > 0.0:
            raise ConfigurationError(f"exponential rate must be positive, got {rate!r}")
        return cls("discretized-exponential", (float(rate),))

    @classmethod
    def discretized_truncated_normal(cls, mu: float, sigma: float) -> "DelayModel":
        if not sigma > 0.0:
            raise ConfigurationError(f"truncated-normal sigma must be positive, got {sigma!r}")
        if mu < 0.0:
            raise ConfigurationError(f"truncated-normal mu must be nonnegative, got {mu!r}")
        return cls("discretized-truncated-normal", (float(mu), float(sigma)))

    # -- sampling ------------------------------------------------------

    def sample(self, next_u: Callable[[], float]) -> int:
        """Draw one delay using uniforms pulled from ``next_u``."""
        kind = self.kind
        if kind == "constant":
            return self.params[0]
        u = next_u()
        if kind == "uniform-int":
            d = self.params[0]
            return min(int(math.floor(u * (d + 1.0))), d)
        if kind == "geometric":
            p = self.params[0]
            if p >= 1.0:
                return 0
            return int(math.floor(math.log1p(-u) / math.log1p(-p)))
        if kind == "discretized-exponential":
            return int(math.ceil(-math.log1p(-u) / self.params[0]))
        # discretized-truncated-normal: Box-Muller with rejection below zero.
        mu, sigma = self.params
        while True:
            u2 = next_u()
            x = mu + sigma * (math.sqrt(-2.0 * math.log1p(-u)) * math.cos(_TWO_PI * u2))
            if x >= 0.0:
                return int(math.ceil(x))
            u = next_u()

    # -- moments -------------------------------------------------------

    def moments(self) -> DelayMoments:
        """Mean, variance, and (where defined) the support bound.

        Closed forms for the first three kinds; numeric summation with the
        tail truncated at residual < 1e-12 for the discretized kinds.
        """
        kind = self.kind
        if kind == "constant":
            c = self.params[0]
            return DelayMoments(float(c), 0.0, c)
        if kind == "uniform-int":
            d = self.params[0]
            return DelayMoments(d / 2.0, d * (d + 2.0) / 12.0, d)
        if kind == "geometric":
            p = self.params[0]
            return DelayMoments((1.0 - p) / p, (1.0 - p) / (p * p), None)
        mean, var = _summed_moments(self._pmf_tail())
        return DelayMoments(mean, var, None)

    def _pmf_tail(self):
        """Yield (k, P(tau = k), residual P(tau > k)) for k = 1, 2, ...

        Both discretized kinds put zero mass on tau = 0 (the underlying
        continuous draw is almost surely positive before the ceiling).
        """
        if self.kind == "discretized-exponential":
            rate = self.params[0]
            k = 1
            prev_sf = 1.0  # P(X > k - 1)
            while True:
                sf = math.exp(-rate * k)
                yield k, prev_sf - sf, sf
                prev_sf = sf
                k += 1
        else:
            mu, sigma = self.params
            z = 1.0 - _phi((0.0 - mu) / sigma)
            k = 1
            prev_sf = z  # P(X > k - 1), unnormalized
            while True:
                sf = 1.0 - _phi((k - mu) / sigma)
                yield k, (prev_sf - sf) / z, sf / z
                prev_sf = sf
                k += 1

    def kernel_code(self) -> tuple[int, float, float]:
        """(kind code, first parameter, second parameter) for the kernels."""
        a = float(self.params[0])
        b = float(self.params[1]) if len(self.params) > 1 else 0.0
        return KIND_CODES[self.kind], a, b


def _phi(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _summed_moments(pmf_tail) -> tuple[float, float]:
    mean = 0.0
    second = 0.0
    for k, pk, residual in pmf_tail:
        mean += k * pk
        second += (k * k) * pk
        # the dropped tail contributes O(residual * k^2) to the second
        # moment, so weight the cutoff to keep moment errors below 1e-9
        if residual < _TAIL_RESIDUAL and residual * (k * k) < 1e-13:
            break
    return mean, second - mean * mean


def delay_moments(model: DelayModel) -> DelayMoments:
    """Functional alias for :meth:`DelayModel.moments`."""
    return model.moments()


def sample_delays(model: DelayModel, n: int, seed) -> np.ndarray:
    """Draw ``n`` delays from a fresh PCG64 stream (compiled path if available).

    Mainly for Monte-Carlo tests of the sampling/moment agreement.
    """
    from . import backend

    bg = np.random.PCG64(seed)
    if backend.kernels is not None:
        code, a, b = model.kernel_code()
        return backend.kernels.delay_samples(code, a, b, n, bg)
    rng = np.random.Generator(bg)
    next_u = rng.random
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = model.sample(next_u)
    return out
