"""Per-step KL-constrained boosting of a single arm's pull probability.

Maximizing one arm's probability over the KL ball d_KL(pi, pi_ref) <= eps
reduces to a single Bernoulli parameter: the optimum keeps the conditional
distribution over the remaining arms equal to the reference's, so only the
target mass q is free and the constraint is KL(Ber(q), Ber(p)) <= eps with
p the target's reference probability. The exact solution comes from
bisection; a closed-form Lambert-W underestimator is available as a cheap
approximation that becomes exact as p -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import SimplexDistribution

#: Sentinel for an unlimited KL budget (the boosted arm gets probability 1).
UNCONSTRAINED = math.inf


class InfeasibleBoostError(ValueError):
    """Raised when the target arm has zero reference probability and cannot be boosted."""


def bernoulli_kl(q: float, p: float) -> float:
    """KL divergence between Bernoulli(q) and Bernoulli(p), with the 0*log0 = 0 convention."""
    q = float(q)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p!r}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    return float(_kernels.bernoulli_kl(q, p))


def boost_probability(p: float, epsilon: float) -> float:
    """Largest q >= p with KL(Ber(q), Ber(p)) <= epsilon.

    Solved by bisection on [p, 1] to absolute tolerance 1e-12 (the KL is
    strictly increasing in q there). epsilon = 0 returns p; any
    epsilon >= -log(p), including UNCONSTRAINED, returns 1.
    """
    p = float(p)
    epsilon = float(epsilon)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if epsilon < 0.0 or math.isnan(epsilon):
        raise ValueError(f"epsilon must be nonnegative, got {epsilon!r}")
    return float(_kernels.boost_qstar(p, epsilon))


def boost_probability_approx(p: float, epsilon: float) -> float:
    """Closed-form underestimator of :func:`boost_probability`, exact as p -> 0.

    q_hat = max( max(eps / W(eps/p), p), p + sqrt(eps*p*(1-p)) ), clamped to 1,
    with W the principal Lambert W branch.
    """
    p = float(p)
    epsilon = float(epsilon)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p!r}")
    if not epsilon > 0.0 or not math.isfinite(epsilon):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")
    return float(_kernels.boost_qhat(p, epsilon))


def lambert_w(x: float) -> float:
    """Principal branch of the Lambert W function on [0, inf): w * e^w = x.

    Halley iteration from a log-based initial guess; relative residual
    below 1e-12.
    """
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise ValueError(f"x must be >= 0 (negative branch unsupported), got {x!r}")
    return float(_kernels.lambert_w0(x))


@dataclass(frozen=True)
class BoostSolution:
    """Result of boosting one arm: its new probability, the full policy, and the KL spent."""

    q_star: float
    distribution: SimplexDistribution
    achieved_kl: float


def boost_distribution(reference: SimplexDistribution, target: int,
                       epsilon: float, use_approx: bool = False) -> BoostSolution:
    """Boost ``target``'s probability within a KL ball of radius ``epsilon`` around ``reference``.

    The target receives q* = boost_probability(p, epsilon); the remaining mass
    is spread over the other arms proportionally to their reference
    probabilities, which leaves the conditional distribution given "not the
    target" untouched. With epsilon = 0 the reference comes back unchanged
    (bit for bit). ``use_approx`` swaps in the Lambert-W underestimator.
    """
    target = int(target)
    ref = reference.probs
    if not 0 <= target < ref.size:
        raise ValueError(f"target index {target} out of range [0, {ref.size})")
    epsilon = float(epsilon)
    if epsilon < 0.0 or math.isnan(epsilon):
        raise ValueError(f"epsilon must be nonnegative, got {epsilon!r}")
    if ref[target] <= 0.0:
        raise InfeasibleBoostError(
            f"target arm {target} has zero reference probability and cannot be boosted")
    out = np.empty_like(ref)
    q_star, achieved = _kernels.boost_into(ref, target, epsilon, bool(use_approx), out)
    if epsilon == 0.0 or ref[target] >= 1.0:
        # untouched path: hand the original vector back unchanged
        return BoostSolution(q_star=float(q_star), distribution=reference, achieved_kl=0.0)
    return BoostSolution(q_star=float(q_star),
                         distribution=SimplexDistribution(out),
                         achieved_kl=float(achieved))


def boost_curve(epsilon: float, p_min: float, p_max: float, points: int) -> np.ndarray:
    """(p, q*, q_hat) triples on a log-spaced grid of base probabilities at fixed epsilon."""
    if not 0.0 < p_min < p_max < 1.0:
        raise ValueError("need 0 < p_min < p_max < 1")
    if points < 2:
        raise ValueError("need at least 2 grid points")
    ps = np.logspace(math.log10(p_min), math.log10(p_max), int(points))
    rows = np.empty((ps.size, 3))
    for i, p in enumerate(ps):
        rows[i, 0] = p
        rows[i, 1] = boost_probability(p, epsilon)
        rows[i, 2] = boost_probability_approx(p, epsilon)
    return rows
