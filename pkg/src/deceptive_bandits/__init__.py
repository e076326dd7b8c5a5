"""Deceptive exploration in Gaussian multi-armed bandits.

An agent constrained to stay within a per-step KL ball of Thompson Sampling
(computed on public rewards) explores to identify the best arm according to
its private rewards. The package provides the reference-policy probabilities,
the KL-boosting solvers, the decaying-success process and its rate predictor,
the optimal boosting-allocation solver, the top-two exploration agent, and a
reproducible experiment harness with CSV output.
"""

from .core import (BanditInstance, PosteriorState, RandomSource, SimplexDistribution,
                   sample_rewards, update_posterior)
from .reference_policy import (GaussianBeliefs, QuadratureRule, optimal_arm_probabilities,
                               optimal_arm_probabilities_mc)
from .kl_boost import (UNCONSTRAINED, BoostSolution, InfeasibleBoostError, bernoulli_kl,
                       boost_distribution, boost_probability, boost_probability_approx,
                       lambert_w)
from .decay_process import (DecayProcessParams, SuccessTrace, expected_hitting_time,
                            predicted_pulls, simulate_decay, simulate_decay_fast)
from .allocation import (AllocationSolution, GapStructure, NumericalFailureError,
                         UnsupportedInstanceError, gamma, gap_structure,
                         gap_structure_from_means, solve_allocation, solve_allocation_oracle)
from .agent import (AgentConfig, AgentState, EpisodeResult, StepRecord, agent_step,
                    check_stopping, ids_choice, run_episode, select_challenger,
                    select_leader, write_trace_csv)
from .experiments import (AggregateSeries, ConfigError, ExperimentConfig, ExperimentResult,
                          aggregate, preset, run_experiment)

__version__ = "0.1.0"
