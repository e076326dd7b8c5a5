"""Bernoulli trials whose success probability decays with each success.

The process models repeated boosting of a publicly suboptimal arm: the trial
at time t succeeds with probability c / (M_t + m0), where M_t counts prior
successes. Successes accumulate like sqrt(2*c*T), and the expected time of
the h-th success is h*(h-1)/(2c) + m0*h/c. ``predicted_pulls`` is the matching
pull-count predictor for an arm boosted a ``share`` fraction of the time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RandomSource

# Chunk width for the first-success scan; one uniform is consumed per trial
# regardless, so chunking never changes the sampled path.
_SCAN_CHUNK = 4096


@dataclass(frozen=True)
class DecayProcessParams:
    """Process parameters: success probability c / (successes + m0), run for ``horizon`` trials."""

    c: float
    m0: float
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "m0", float(self.m0))
        object.__setattr__(self, "horizon", int(self.horizon))
        if not 0.0 < self.c <= self.m0:
            raise ValueError(f"need 0 < c <= m0, got c={self.c!r}, m0={self.m0!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass(frozen=True)
class SuccessTrace:
    """Success counts over time: success_counts[t] = M_t = number of successes before time t.

    The vector has length horizon + 1 so both endpoints are available:
    success_counts[0] = 0 and success_counts[horizon] = M_T.
    """

    success_counts: np.ndarray

    @property
    def horizon(self) -> int:
        return self.success_counts.size - 1

    @property
    def final_count(self) -> int:
        return int(self.success_counts[-1])

    def hitting_time(self, h: int) -> int | None:
        """First time t with M_t = h, or None if the h-th success never happened."""
        t = int(np.searchsorted(self.success_counts, h, side="left"))
        return t if t <= self.horizon and self.success_counts[t] >= h else None


def _counts_from_success_times(times: list[int], horizon: int) -> np.ndarray:
    increments = np.zeros(horizon + 1, dtype=np.int64)
    for t in times:
        increments[t] = 1
    return np.cumsum(increments)


def simulate_decay(params: DecayProcessParams, rng: RandomSource) -> SuccessTrace:
    """Run the process with one uniform draw per trial.

    Trial t (1-based) succeeds iff u_t < c / (M + m0) for the current success
    count M, with the probability clamped at 1. Because exactly one uniform is
    consumed per trial in order, runs with the same seed but different ``c``
    are coupled through shared draws.
    """
    horizon = params.horizon
    u = rng.gen.random(horizon)
    c, m0 = params.c, params.m0
    times: list[int] = []
    m = 0
    pos = 0
    while pos < horizon:
        threshold = min(1.0, c / (m + m0))
        hit = -1
        scan = pos
        while scan < horizon:
            block = u[scan:scan + _SCAN_CHUNK] < threshold
            j = int(block.argmax())
            if block[j]:
                hit = scan + j
                break
            scan += _SCAN_CHUNK
        if hit < 0:
            break
        times.append(hit + 1)  # success during trial hit+1 raises M at that time
        m += 1
        pos = hit + 1
    return SuccessTrace(_counts_from_success_times(times, horizon))


def simulate_decay_fast(params: DecayProcessParams, rng: RandomSource) -> SuccessTrace:
    """Equivalent-in-distribution accelerated run: samples geometric inter-success gaps.

    O(M_T) work instead of O(T); the waiting time after the k-th success is
    Geometric(c / (k + m0)). Uses a different draw layout than
    :func:`simulate_decay`, so identical seeds do not give identical paths,
    only identical distributions.
    """
    horizon = params.horizon
    c, m0 = params.c, params.m0
    times: list[int] = []
    t = 0
    m = 0
    while True:
        p = min(1.0, c / (m + m0))
        t += int(rng.gen.geometric(p))
        if t > horizon:
            break
        times.append(t)
        m += 1
    return SuccessTrace(_counts_from_success_times(times, horizon))


def expected_hitting_time(c: float, m0: float, h: int) -> float:
    """Expected time of the h-th success: h*(h-1)/(2c) + m0*h/c."""
    return h * (h - 1) / (2.0 * c) + m0 * h / c


def predicted_pulls(epsilon: float, variance: float, gap: float, share: float, t: float) -> float:
    """Asymptotic pull-count prediction sqrt(4 * eps * sigma^2 * share * t) / gap.

    ``gap`` is the arm's public suboptimality gap and ``share`` the fraction of
    steps on which it is boosted. Arms with zero gap (the public best arm) are
    outside the model.
    """
    epsilon = float(epsilon)
    variance = float(variance)
    gap = float(gap)
    share = float(share)
    if gap <= 0.0:
        raise ValueError("gap must be positive (the public-optimal arm has no decay prediction)")
    if epsilon < 0.0 or variance < 0.0:
        raise ValueError("epsilon and variance must be nonnegative")
    if not 0.0 < share <= 1.0:
        raise ValueError("share must lie in (0, 1]")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.sqrt(4.0 * epsilon * variance * share * t) / gap
