"""Thompson-Sampling arm-selection probabilities for Gaussian posteriors.

The reference policy pulls arm ``a`` with the probability that a sample from
its posterior exceeds the samples of every other arm. That probability,
P(X_a = max_i X_i), is computed by Gauss-Hermite quadrature:

    P(X_a = max_i X_i) ~= (1/sqrt(pi)) * sum_q w_q * prod_{j!=a} Phi((mu_a - mu_j + sqrt(2)*s_a*x_q) / s_j)

with a Monte-Carlo estimator alongside as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .core import PosteriorState, RandomSource, SimplexDistribution

DEFAULT_NODES = 32

# Required accuracy of the node/weight construction: sum of weights vs sqrt(pi).
_WEIGHT_SUM_GATE = 1e-10

# The raw quadrature mass must stay this close to 1 for the result to be trusted.
_MASS_TOL = 1e-4


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes (roots of the degree-n Hermite polynomial) and weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d vectors of equal length")
        if (weights <= 0).any():
            raise ValueError("weights must be positive")
        if abs(weights.sum() - math.sqrt(math.pi)) > 1e-8:
            raise ValueError("weights must sum to sqrt(pi)")

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @classmethod
    def gauss_hermite(cls, n: int = DEFAULT_NODES) -> "QuadratureRule":
        return _gauss_hermite_cached(int(n))


@lru_cache(maxsize=None)
def _gauss_hermite_cached(n: int) -> QuadratureRule:
    if n < 1:
        raise ValueError("need at least one node")
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    if abs(weights.sum() - math.sqrt(math.pi)) > _WEIGHT_SUM_GATE:
        raise ValueError(f"Gauss-Hermite weights for n={n} fail the sqrt(pi) accuracy gate")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


@dataclass(frozen=True)
class GaussianBeliefs:
    """Independent Gaussian posteriors, one per arm: N(means[a], stddevs[a]^2)."""

    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        stddevs = np.asarray(self.stddevs, dtype=float)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stddevs)
        if means.ndim != 1 or means.shape != stddevs.shape:
            raise ValueError("means and stddevs must be 1-d vectors of equal length")
        if (stddevs <= 0).any() or not np.isfinite(stddevs).all():
            raise ValueError("stddevs must be strictly positive and finite")
        if not np.isfinite(means).all():
            raise ValueError("means must be finite")

    @property
    def n_arms(self) -> int:
        return self.means.size

    @classmethod
    def from_posterior(cls, state: PosteriorState, variance: float) -> "GaussianBeliefs":
        if (state.counts < 1).any():
            raise ValueError("posterior beliefs require at least one pull of every arm")
        if variance <= 0:
            raise ValueError("variance must be positive")
        return cls(state.empirical_means.copy(), np.sqrt(variance / state.counts))


def optimal_arm_probabilities(beliefs: GaussianBeliefs, rule: QuadratureRule | None = None) -> SimplexDistribution:
    """Probability that each arm's posterior sample is the maximum, via quadrature.

    The raw quadrature outputs must already sum to 1 within 1e-4; they are then
    clamped to a 1e-300 floor (so every arm keeps a strictly positive
    probability) and renormalized to an exact simplex point.
    """
    if rule is None:
        rule = QuadratureRule.gauss_hermite()
    if beliefs.n_arms < 2:
        raise ValueError("need at least 2 arms")
    if rule.n_nodes < 8:
        raise ValueError("need at least 8 quadrature nodes")
    out = np.empty(beliefs.n_arms)
    total = _kernels.max_prob_quadrature(beliefs.means, beliefs.stddevs, rule.nodes, rule.weights, out)
    if abs(total - 1.0) > _MASS_TOL:
        raise ValueError(f"raw quadrature mass {total!r} deviates from 1 by more than {_MASS_TOL}")
    _kernels.clamp_normalize(out)
    return SimplexDistribution(out)


def optimal_arm_probabilities_mc(beliefs: GaussianBeliefs, samples: int, rng: RandomSource) -> SimplexDistribution:
    """Monte-Carlo estimate: frequency that each arm's draw is the maximum.

    Ties (a zero-probability event) resolve to the lowest index. Draws are
    consumed in row-major (sample, arm) order.
    """
    samples = int(samples)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    k = beliefs.n_arms
    wins = np.zeros(k, dtype=np.int64)
    remaining = samples
    chunk = max(1, 2_000_000 // k)
    while remaining > 0:
        m = min(chunk, remaining)
        draws = rng.gen.standard_normal((m, k)) * beliefs.stddevs + beliefs.means
        wins += np.bincount(draws.argmax(axis=1), minlength=k)
        remaining -= m
    return SimplexDistribution(wins / samples)
