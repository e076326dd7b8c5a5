import numpy as np
import pytest

from deceptive_bandits.core import RandomSource
from deceptive_bandits.reference_policy import (GaussianBeliefs, QuadratureRule,
                                                optimal_arm_probabilities,
                                                optimal_arm_probabilities_mc)


def random_beliefs(rng, k, std_ratio=1.5):
    """Belief states inside the supported accuracy regime: pairwise mean gaps at
    most 10 posterior stddevs and posterior widths within a small factor of one
    another (wider spreads degrade the fixed 32-node rule)."""
    scale = 10.0 ** float(rng.uniform() - 1.0)
    stds = scale * np.exp(np.log(std_ratio) * rng.uniform(size=k))
    means = rng.uniform(size=k) * 10.0 * stds.min()
    return GaussianBeliefs(means, stds)


class TestQuadratureRule:
    def test_weights_sum_to_sqrt_pi(self):
        rule = QuadratureRule.gauss_hermite(32)
        assert abs(rule.weights.sum() - np.sqrt(np.pi)) < 1e-10
        assert rule.n_nodes == 32

    def test_nodes_symmetric(self):
        rule = QuadratureRule.gauss_hermite(32)
        assert np.allclose(rule.nodes, -rule.nodes[::-1], atol=1e-12)

    def test_cached(self):
        assert QuadratureRule.gauss_hermite(32) is QuadratureRule.gauss_hermite(32)


class TestOptimalArmProbabilities:
    def test_two_identical_arms(self):
        beliefs = GaussianBeliefs([0.4, 0.4], [0.2, 0.2])
        probs = optimal_arm_probabilities(beliefs).probs
        assert probs == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_k_identical_arms_uniform(self):
        k = 5
        beliefs = GaussianBeliefs(np.full(k, 0.1), np.full(k, 0.3))
        probs = optimal_arm_probabilities(beliefs).probs
        assert probs == pytest.approx(np.full(k, 1 / k), abs=1e-9)

    def test_matches_monte_carlo_oracle(self):
        # the stated two-arm example: means (0.6, 0.3), stddevs (0.1, 0.1)
        beliefs = GaussianBeliefs([0.6, 0.3], [0.1, 0.1])
        quad = optimal_arm_probabilities(beliefs).probs
        mc = optimal_arm_probabilities_mc(beliefs, 10 ** 7, RandomSource(0)).probs
        assert np.abs(quad - mc).max() < 3e-3

    def test_monotone_in_own_mean(self):
        rng = RandomSource(1)
        for _ in range(100):
            beliefs = random_beliefs(rng, 4)
            base = optimal_arm_probabilities(beliefs).probs[2]
            bumped_means = beliefs.means.copy()
            bumped_means[2] += 0.05
            bumped = optimal_arm_probabilities(GaussianBeliefs(bumped_means, beliefs.stddevs)).probs[2]
            assert bumped >= base - 1e-12

    def test_translation_invariance(self):
        rng = RandomSource(2)
        beliefs = random_beliefs(rng, 4)
        shifted = GaussianBeliefs(beliefs.means + 0.5, beliefs.stddevs)
        a = optimal_arm_probabilities(beliefs).probs
        b = optimal_arm_probabilities(shifted).probs
        assert np.abs(a - b).max() < 1e-10

    def test_32_vs_64_nodes(self):
        rng = RandomSource(3)
        worst = 0.0
        for _ in range(50):
            beliefs = random_beliefs(rng, 4)
            a = optimal_arm_probabilities(beliefs, QuadratureRule.gauss_hermite(32)).probs
            b = optimal_arm_probabilities(beliefs, QuadratureRule.gauss_hermite(64)).probs
            worst = max(worst, float(np.abs(a - b).max()))
        assert worst < 1e-6

    def test_underflowing_arm_clamped_not_zero(self):
        beliefs = GaussianBeliefs([0.0, -100.0], [0.02, 0.02])
        probs = optimal_arm_probabilities(beliefs).probs
        assert probs[1] > 0.0
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_bad_stddev(self):
        with pytest.raises(ValueError):
            GaussianBeliefs([0.1, 0.2], [0.1, 0.0])

    def test_rejects_few_nodes(self):
        beliefs = GaussianBeliefs([0.1, 0.2], [0.1, 0.1])
        with pytest.raises(ValueError, match="nodes"):
            optimal_arm_probabilities(beliefs, QuadratureRule.gauss_hermite(4))

    def test_rejects_single_arm(self):
        with pytest.raises(ValueError):
            optimal_arm_probabilities(GaussianBeliefs([0.1], [0.1]))


class TestMonteCarlo:
    def test_single_sample_is_point_mass(self):
        beliefs = GaussianBeliefs([0.0, 0.0], [1.0, 1.0])
        probs = optimal_arm_probabilities_mc(beliefs, 1, RandomSource(0)).probs
        assert sorted(probs.tolist()) == [0.0, 1.0]

    def test_symmetric_two_arms(self):
        beliefs = GaussianBeliefs([0.2, 0.2], [0.5, 0.5])
        probs = optimal_arm_probabilities_mc(beliefs, 10 ** 6, RandomSource(1)).probs
        assert np.abs(probs - 0.5).max() < 0.002

    def test_cross_oracle_on_random_beliefs(self):
        rng = RandomSource(5)
        beliefs = random_beliefs(rng, 4)
        quad = optimal_arm_probabilities(beliefs).probs
        mc = optimal_arm_probabilities_mc(beliefs, 10 ** 7, RandomSource(6)).probs
        assert np.abs(quad - mc).max() < 3e-3

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            optimal_arm_probabilities_mc(GaussianBeliefs([0, 1], [1, 1]), 0, RandomSource(0))
