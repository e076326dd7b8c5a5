"""Deceptive exploration with top-two sampling.

Each step: draw a leader from the private posterior, draw a challenger with
probability proportional to being optimal, pick which of the two to boost by
information-directed selection (leader with probability N_c / (N_c + N_l)),
boost that arm's reference probability within the KL budget, sample the
action, pull, and update both posteriors. The run stops once the private
posterior puts mass at least 1 - delta on some arm being optimal.

Setting epsilon = 0 reproduces Thompson Sampling on the public rewards
exactly; epsilon = UNCONSTRAINED recovers a standard top-two algorithm (the
boosted arm is pulled deterministically).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import BanditInstance, PosteriorState, RandomSource, SimplexDistribution
from .reference_policy import GaussianBeliefs, QuadratureRule, optimal_arm_probabilities, \
    optimal_arm_probabilities_mc


@dataclass(frozen=True)
class AgentConfig:
    """Run parameters: KL budget, stopping confidence, and step bookkeeping.

    ``epsilon`` may be ``math.inf`` for an unconstrained agent.
    ``mc_samples_for_selection`` = 0 selects the quadrature path for the
    selection/stopping probabilities (the default); a positive value switches
    to Monte-Carlo estimates with that many posterior draws per step.
    ``use_approx_boost`` swaps the exact bisection solver for the closed-form
    underestimator.
    """

    epsilon: float
    delta: float = 0.05
    max_steps: int = 100_000
    mc_samples_for_selection: int = 0
    init_pulls_per_arm: int = 1
    use_approx_boost: bool = False

    def __post_init__(self):
        if self.epsilon < 0 or math.isnan(self.epsilon):
            raise ValueError("epsilon must be nonnegative (math.inf for unconstrained)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.mc_samples_for_selection < 0:
            raise ValueError("mc_samples_for_selection must be >= 0")
        if self.init_pulls_per_arm < 1:
            raise ValueError("init_pulls_per_arm must be >= 1")


@dataclass
class AgentState:
    """Full agent state: both posteriors, boost tallies, and stopping status."""

    public_posterior: PosteriorState
    private_posterior: PosteriorState
    boost_counts: np.ndarray
    step: int = 0
    stopped: bool = False
    recommendation: Optional[int] = None

    @classmethod
    def fresh(cls, n_arms: int) -> "AgentState":
        return cls(
            public_posterior=PosteriorState.empty(n_arms),
            private_posterior=PosteriorState.empty(n_arms),
            boost_counts=np.zeros(n_arms, dtype=np.int64),
        )

    def copy(self) -> "AgentState":
        return AgentState(
            public_posterior=self.public_posterior.copy(),
            private_posterior=self.private_posterior.copy(),
            boost_counts=self.boost_counts.copy(),
            step=self.step,
            stopped=self.stopped,
            recommendation=self.recommendation,
        )


@dataclass(frozen=True)
class StepRecord:
    """Everything observable about one step. ``error_prob`` is the posterior
    probability that some arm other than the true best private arm is optimal,
    measured after this step's update; initialization records carry NaN there
    and -1 for the selection fields."""

    step: int
    leader: int
    challenger: int
    boosted: int
    pulled: int
    reference_probs: SimplexDistribution
    boosted_probs: SimplexDistribution
    error_prob: float
    kl_spent: float


def _require_all_pulled(state: PosteriorState):
    if (state.counts < 1).any():
        raise ValueError("every arm needs at least one pull before posterior operations")


def select_leader(private_posterior: PosteriorState, rng: RandomSource, variance: float = 1.0) -> int:
    """Argmax of one joint draw from the private posteriors (lowest index on ties)."""
    _require_all_pulled(private_posterior)
    sigma = math.sqrt(variance)
    draws = rng.gen.normal(private_posterior.empirical_means,
                           sigma / np.sqrt(private_posterior.counts))
    return int(np.argmax(draws))


def select_challenger(private_posterior: PosteriorState, leader: int, rng: RandomSource,
                      variance: float = 1.0, rule: QuadratureRule | None = None) -> int:
    """Sample an arm != leader proportionally to its posterior optimal-arm probability.

    Probabilities come from quadrature with the leader's entry zeroed and the
    rest renormalized; if the non-leader mass underflows (< 1e-12) the draw
    falls back to uniform over the non-leaders.
    """
    _require_all_pulled(private_posterior)
    beliefs = GaussianBeliefs.from_posterior(private_posterior, variance)
    probs = optimal_arm_probabilities(beliefs, rule).probs
    return int(_kernels.sample_excluding(rng.gen, probs, int(leader)))


def ids_choice(leader: int, challenger: int, counts: np.ndarray, rng: RandomSource) -> int:
    """Information-directed selection: leader with probability N_c / (N_c + N_l)."""
    counts = np.asarray(counts)
    n_l = float(counts[leader])
    n_c = float(counts[challenger])
    if n_l + n_c <= 0:
        raise ValueError("leader and challenger cannot both have zero pulls")
    return int(_kernels.ids_pick(rng.gen, int(leader), int(challenger), n_l, n_c))


def check_stopping(private_posterior: PosteriorState, delta: float, variance: float = 1.0,
                   rule: QuadratureRule | None = None, mc_samples: int = 0,
                   rng: RandomSource | None = None) -> tuple[bool, int, float]:
    """(stop, best arm, p_star): stop once max_a P(a optimal) = p_star >= 1 - delta."""
    _require_all_pulled(private_posterior)
    beliefs = GaussianBeliefs.from_posterior(private_posterior, variance)
    if mc_samples > 0:
        if rng is None:
            raise ValueError("Monte-Carlo stopping needs a RandomSource")
        probs = optimal_arm_probabilities_mc(beliefs, mc_samples, rng).probs
    else:
        probs = optimal_arm_probabilities(beliefs, rule).probs
    best = int(np.argmax(probs))
    p_star = float(probs[best])
    return p_star >= 1.0 - delta, best, p_star


def _rule() -> QuadratureRule:
    return QuadratureRule.gauss_hermite()


def agent_step(state: AgentState, instance: BanditInstance, config: AgentConfig,
               rng: RandomSource) -> tuple[AgentState, StepRecord]:
    """One full exploration step on a copy of ``state`` (initialization must be complete)."""
    _require_all_pulled(state.private_posterior)
    _require_all_pulled(state.public_posterior)
    new = state.copy()
    rule = _rule()
    k = instance.n_arms
    priv_probs = np.empty(k)
    ref_buf = np.empty(k)
    boost_buf = np.empty(k)
    _kernels.refresh_private_probs(
        rng.gen, new.private_posterior.counts, new.private_posterior.empirical_means,
        instance.sigma, config.mc_samples_for_selection, rule.nodes, rule.weights, priv_probs)
    leader, challenger, boosted, pulled, _q_star, kl, err, _best_prob, _best, _xp, _xv = _kernels.one_step(
        rng.gen, instance.public_means, instance.private_means, instance.sigma,
        config.epsilon, config.use_approx_boost, config.mc_samples_for_selection,
        rule.nodes, rule.weights,
        new.public_posterior.counts, new.public_posterior.empirical_means,
        new.private_posterior.counts, new.private_posterior.empirical_means,
        new.boost_counts, priv_probs, ref_buf, boost_buf, instance.best_private_arm)
    new.step += 1
    record = StepRecord(
        step=new.step, leader=int(leader), challenger=int(challenger),
        boosted=int(boosted), pulled=int(pulled),
        reference_probs=SimplexDistribution(ref_buf.copy()),
        boosted_probs=SimplexDistribution(boost_buf.copy()),
        error_prob=float(err), kl_spent=float(kl))
    return new, record


@dataclass
class EpisodeResult:
    """Outcome of one episode, with optional per-step records and grid snapshots.

    ``grid_*`` arrays are filled when a ``grid`` of step counts is supplied:
    row i snapshots the run right after ``grid_times[i]`` total pulls (frozen
    at the final state if the episode stopped earlier).
    """

    steps: int
    stopped: bool
    recommendation: Optional[int]
    final_state: AgentState
    max_kl_spent: float
    eps_zero_bitwise: bool
    records: list = field(default_factory=list)
    grid_times: Optional[np.ndarray] = None
    grid_error_prob: Optional[np.ndarray] = None
    grid_counts: Optional[np.ndarray] = None
    grid_boost_counts: Optional[np.ndarray] = None


def _validated_grid(grid, total_init: int, max_steps: int) -> np.ndarray:
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 1:
        raise ValueError("grid must be a 1-d array of step counts")
    if g.size and ((np.diff(g) <= 0).any() or g[0] <= total_init):
        raise ValueError(f"grid times must be strictly increasing and > {total_init} (initialization)")
    return g


def run_episode(instance: BanditInstance, config: AgentConfig, rng: RandomSource,
                fixed_horizon: bool = False, record_steps: bool = True,
                grid=None) -> EpisodeResult:
    """Run one episode: forced round-robin initialization, then steps until the
    stopping rule fires or ``config.max_steps`` pulls are spent.

    ``fixed_horizon=True`` disables stopping so the full trajectory is traced.
    ``record_steps=False`` skips per-step records and runs the whole loop
    compiled; results are identical for the same seed.
    """
    if instance.variance <= 0:
        raise ValueError("agent runs need variance > 0")
    k = instance.n_arms
    total_init = k * config.init_pulls_per_arm
    if config.max_steps < total_init:
        raise ValueError(f"max_steps must cover initialization ({total_init} pulls)")
    grid_arr = _validated_grid(grid, total_init, config.max_steps) if grid is not None else None
    rule = _rule()
    astar = instance.best_private_arm

    state = AgentState.fresh(k)
    pub, priv = state.public_posterior, state.private_posterior
    n_grid = 0 if grid_arr is None else grid_arr.size
    grid_err = np.full(n_grid, np.nan)
    grid_counts = np.zeros((n_grid, k), dtype=np.int64)
    grid_boosts = np.zeros((n_grid, k), dtype=np.int64)

    if not record_steps:
        steps, stopped, recommendation, max_kl, eps0_ok = _kernels.episode_loop(
            rng.gen, instance.public_means, instance.private_means, instance.sigma,
            config.epsilon, config.use_approx_boost, config.mc_samples_for_selection,
            config.delta, config.max_steps, config.init_pulls_per_arm,
            not fixed_horizon, astar, rule.nodes, rule.weights,
            grid_arr if grid_arr is not None else np.empty(0, dtype=np.int64),
            pub.counts, pub.empirical_means, priv.counts, priv.empirical_means,
            state.boost_counts, grid_err, grid_counts, grid_boosts)
        state.step = int(steps)
        state.stopped = bool(stopped)
        state.recommendation = int(recommendation) if stopped else None
        return EpisodeResult(
            steps=int(steps), stopped=bool(stopped),
            recommendation=state.recommendation, final_state=state,
            max_kl_spent=float(max_kl), eps_zero_bitwise=bool(eps0_ok),
            records=[],
            grid_times=grid_arr, grid_error_prob=grid_err if grid_arr is not None else None,
            grid_counts=grid_counts if grid_arr is not None else None,
            grid_boost_counts=grid_boosts if grid_arr is not None else None)

    # recorded path: same kernels, driven step by step from Python
    records: list[StepRecord] = []
    t = _kernels.init_rounds(rng.gen, instance.public_means, instance.private_means,
                             instance.sigma, config.init_pulls_per_arm,
                             pub.counts, pub.empirical_means, priv.counts, priv.empirical_means)
    for r in range(config.init_pulls_per_arm):
        for a in range(k):
            forced = SimplexDistribution.point_mass(k, a)
            records.append(StepRecord(step=r * k + a + 1, leader=-1, challenger=-1,
                                      boosted=-1, pulled=a, reference_probs=forced,
                                      boosted_probs=forced, error_prob=math.nan, kl_spent=0.0))
    priv_probs = np.empty(k)
    ref_buf = np.empty(k)
    boost_buf = np.empty(k)
    _kernels.refresh_private_probs(rng.gen, priv.counts, priv.empirical_means, instance.sigma,
                                   config.mc_samples_for_selection, rule.nodes, rule.weights,
                                   priv_probs)
    err, best_prob, best = _kernels.stopping_stats(priv_probs, astar)

    gi = 0
    stopped = False
    recommendation = None
    max_kl = 0.0
    eps0_ok = True
    while t < config.max_steps:
        leader, challenger, boosted, pulled, q_star, kl, err, best_prob, best, _xp, _xv = _kernels.one_step(
            rng.gen, instance.public_means, instance.private_means, instance.sigma,
            config.epsilon, config.use_approx_boost, config.mc_samples_for_selection,
            rule.nodes, rule.weights, pub.counts, pub.empirical_means,
            priv.counts, priv.empirical_means, state.boost_counts,
            priv_probs, ref_buf, boost_buf, astar)
        t += 1
        max_kl = max(max_kl, float(kl))
        if config.epsilon == 0.0 and not np.array_equal(boost_buf, ref_buf):
            eps0_ok = False
        records.append(StepRecord(
            step=t, leader=int(leader), challenger=int(challenger), boosted=int(boosted),
            pulled=int(pulled), reference_probs=SimplexDistribution(ref_buf.copy()),
            boosted_probs=SimplexDistribution(boost_buf.copy()),
            error_prob=float(err), kl_spent=float(kl)))
        while gi < n_grid and grid_arr[gi] == t:
            grid_err[gi] = err
            grid_counts[gi] = pub.counts
            grid_boosts[gi] = state.boost_counts
            gi += 1
        if not fixed_horizon and best_prob >= 1.0 - config.delta:
            stopped = True
            recommendation = int(best)
            break
    while gi < n_grid:
        grid_err[gi] = err
        grid_counts[gi] = pub.counts
        grid_boosts[gi] = state.boost_counts
        gi += 1

    state.step = t
    state.stopped = stopped
    state.recommendation = recommendation
    return EpisodeResult(
        steps=t, stopped=stopped, recommendation=recommendation, final_state=state,
        max_kl_spent=max_kl, eps_zero_bitwise=eps0_ok, records=records,
        grid_times=grid_arr, grid_error_prob=grid_err if grid_arr is not None else None,
        grid_counts=grid_counts if grid_arr is not None else None,
        grid_boost_counts=grid_boosts if grid_arr is not None else None)


TRACE_BASE_COLUMNS = ("seed", "step", "leader", "challenger", "boosted", "pulled",
                      "error_prob", "kl_spent")


def write_trace_csv(path, result: EpisodeResult, seed: int, n_arms: int):
    """One row per recorded step: selection fields, error, KL, running pull and boost counts."""
    if not result.records:
        raise ValueError("episode was run without per-step records")
    counts = np.zeros(n_arms, dtype=np.int64)
    boosts = np.zeros(n_arms, dtype=np.int64)
    header = list(TRACE_BASE_COLUMNS) + [f"n_{a}" for a in range(n_arms)] + \
        [f"boost_{a}" for a in range(n_arms)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in result.records:
            counts[rec.pulled] += 1
            if rec.boosted >= 0:
                boosts[rec.boosted] += 1
            writer.writerow([seed, rec.step, rec.leader, rec.challenger, rec.boosted,
                             rec.pulled, f"{rec.error_prob:.12g}", f"{rec.kl_spent:.12g}"]
                            + counts.tolist() + boosts.tolist())
