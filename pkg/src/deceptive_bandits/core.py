"""Ground-truth bandit instances, reward sampling, posterior bookkeeping and seeded randomness.

Every pull of an arm produces two independent Gaussian rewards: a public one
(visible to an outside observer) and a private one (visible only to the agent).
All randomness flows through :class:`RandomSource` so that a run is fully
determined by its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class RandomSource:
    """Seeded, splittable random stream (PCG64 behind a numpy Generator).

    Identical seed + identical call sequence gives bit-identical outputs.
    Child streams obtained via :meth:`child` are statistically independent
    of the parent and of each other (SeedSequence spawn keys).
    """

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        self._seq = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self.gen = np.random.Generator(np.random.PCG64(self._seq))

    def child(self, *indices: int) -> "RandomSource":
        """Independent stream derived from this source's seed and the given indices."""
        return RandomSource(self.seed, self.spawn_key + tuple(indices))

    # thin delegates for the common draws
    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def uniform(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"


def _unique_argmax(values: np.ndarray, what: str) -> int:
    top = values.max()
    winners = np.flatnonzero(values == top)
    if winners.size != 1:
        raise ValueError(f"{what} must have a unique maximizer, got ties at {winners.tolist()}")
    return int(winners[0])


@dataclass(frozen=True)
class BanditInstance:
    """Ground truth of a simulation: public/private mean vectors and the shared reward variance.

    ``variance`` may be 0 as a degenerate limit (rewards equal the means exactly),
    which is occasionally useful in tests; agent runs require ``variance > 0``.
    """

    public_means: np.ndarray
    private_means: np.ndarray
    variance: float = 1.0

    def __post_init__(self):
        pub = np.asarray(self.public_means, dtype=float)
        priv = np.asarray(self.private_means, dtype=float)
        object.__setattr__(self, "public_means", pub)
        object.__setattr__(self, "private_means", priv)
        object.__setattr__(self, "variance", float(self.variance))
        if pub.ndim != 1 or priv.ndim != 1 or pub.shape != priv.shape:
            raise ValueError("public_means and private_means must be 1-d vectors of equal length")
        if pub.size < 2:
            raise ValueError("need at least 2 arms")
        if not np.isfinite(pub).all() or not np.isfinite(priv).all():
            raise ValueError("means must be finite")
        if self.variance < 0 or not np.isfinite(self.variance):
            raise ValueError("variance must be nonnegative and finite")
        _unique_argmax(priv, "private_means")
        _unique_argmax(pub, "public_means")

    @property
    def n_arms(self) -> int:
        return self.public_means.size

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def best_private_arm(self) -> int:
        return _unique_argmax(self.private_means, "private_means")

    @property
    def best_public_arm(self) -> int:
        return _unique_argmax(self.public_means, "public_means")

    def to_dict(self) -> dict:
        return {
            "public_means": self.public_means.tolist(),
            "private_means": self.private_means.tolist(),
            "variance": self.variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BanditInstance":
        unknown = set(d) - {"public_means", "private_means", "variance"}
        if unknown:
            raise ValueError(f"unknown instance keys: {sorted(unknown)}")
        for key in ("public_means", "private_means"):
            if key not in d:
                raise ValueError(f"instance is missing required key '{key}'")
        return cls(d["public_means"], d["private_means"], d.get("variance", 1.0))


@dataclass
class PosteriorState:
    """Per-arm pull counts and running empirical means.

    The Gaussian posterior of arm ``a`` is N(empirical_means[a], variance / counts[a]),
    defined only once ``counts[a] >= 1`` (improper prior before the first pull).
    ``reward_log`` optionally keeps every observed reward per arm for debugging /
    oracle tests; it is off by default.
    """

    counts: np.ndarray
    empirical_means: np.ndarray
    reward_log: Optional[list] = None

    @classmethod
    def empty(cls, n_arms: int, track_rewards: bool = False) -> "PosteriorState":
        return cls(
            counts=np.zeros(n_arms, dtype=np.int64),
            empirical_means=np.zeros(n_arms, dtype=float),
            reward_log=[[] for _ in range(n_arms)] if track_rewards else None,
        )

    @property
    def n_arms(self) -> int:
        return self.counts.size

    @property
    def total_pulls(self) -> int:
        return int(self.counts.sum())

    def copy(self) -> "PosteriorState":
        return PosteriorState(
            counts=self.counts.copy(),
            empirical_means=self.empirical_means.copy(),
            reward_log=None if self.reward_log is None else [list(r) for r in self.reward_log],
        )


@dataclass(frozen=True)
class SimplexDistribution:
    """Probability vector over the K arms: entries nonnegative, summing to 1 (within 1e-9)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1-d vector")
        if not np.isfinite(p).all():
            raise ValueError("probs must be finite")
        if (p < 0).any():
            raise ValueError("probs must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probs must sum to 1 within 1e-9, got {p.sum()!r}")

    @property
    def n_arms(self) -> int:
        return self.probs.size

    def sample(self, rng: RandomSource) -> int:
        """Draw one arm index; consumes exactly one uniform."""
        u = rng.gen.random()
        last_positive = 0
        for i, pi in enumerate(self.probs):
            if pi > 0.0:
                last_positive = i
            u -= pi
            if u < 0.0:
                return i
        return last_positive

    @classmethod
    def uniform(cls, n_arms: int) -> "SimplexDistribution":
        return cls(np.full(n_arms, 1.0 / n_arms))

    @classmethod
    def point_mass(cls, n_arms: int, arm: int) -> "SimplexDistribution":
        p = np.zeros(n_arms)
        p[arm] = 1.0
        return cls(p)


def _check_arm(arm: int, n_arms: int) -> int:
    arm = int(arm)
    if not 0 <= arm < n_arms:
        raise ValueError(f"arm index {arm} out of range [0, {n_arms})")
    return arm


def sample_rewards(instance: BanditInstance, arm: int, rng: RandomSource) -> tuple[float, float]:
    """Pull an arm: two independent draws (public reward, private reward).

    Drawn in that order so the stream layout is stable across runs.
    """
    arm = _check_arm(arm, instance.n_arms)
    sigma = instance.sigma
    x_pub = float(rng.gen.normal(instance.public_means[arm], sigma))
    x_priv = float(rng.gen.normal(instance.private_means[arm], sigma))
    return x_pub, x_priv


def update_posterior(state: PosteriorState, arm: int, reward: float) -> PosteriorState:
    """Record one reward for ``arm``: increments its count and updates the running mean.

    Returns a new state; the input is left untouched.
    """
    arm = _check_arm(arm, state.n_arms)
    new = state.copy()
    new.counts[arm] += 1
    new.empirical_means[arm] += (reward - new.empirical_means[arm]) / new.counts[arm]
    if new.reward_log is not None:
        new.reward_log[arm].append(float(reward))
    return new
