import numpy as np
import pytest

from deceptive_bandits.core import (BanditInstance, PosteriorState, RandomSource,
                                    SimplexDistribution, sample_rewards, update_posterior)


@pytest.fixture
def instance():
    return BanditInstance([0.6, 0.3, 0.0, 0.2], [0.2, 0.5, 0.1, 0.0], variance=1.0)


class TestBanditInstance:
    def test_best_arms(self, instance):
        assert instance.best_public_arm == 0
        assert instance.best_private_arm == 1
        assert instance.n_arms == 4
        assert instance.sigma == 1.0

    def test_rejects_single_arm(self):
        with pytest.raises(ValueError):
            BanditInstance([0.5], [0.3])

    def test_rejects_tied_best(self):
        with pytest.raises(ValueError, match="unique"):
            BanditInstance([0.6, 0.6, 0.1], [0.1, 0.2, 0.3])
        with pytest.raises(ValueError, match="unique"):
            BanditInstance([0.6, 0.5, 0.1], [0.3, 0.3, 0.1])

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError):
            BanditInstance([0.6, 0.3], [0.1, 0.2], variance=-1.0)

    def test_ties_among_losers_are_fine(self):
        inst = BanditInstance([0.6, 0.1, 0.1, 0.1], [0.2, 0.5, 0.0, 0.0])
        assert inst.best_public_arm == 0
        assert inst.best_private_arm == 1

    def test_dict_round_trip(self, instance):
        again = BanditInstance.from_dict(instance.to_dict())
        assert np.array_equal(again.public_means, instance.public_means)
        assert np.array_equal(again.private_means, instance.private_means)
        assert again.variance == instance.variance

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown"):
            BanditInstance.from_dict({"public_means": [0, 1], "private_means": [1, 0], "var": 2})


class TestRandomSource:
    def test_determinism(self):
        a = RandomSource(123).normal(size=10)
        b = RandomSource(123).normal(size=10)
        assert np.array_equal(a, b)

    def test_children_are_independent_streams(self):
        parent = RandomSource(7)
        a = parent.child(0).normal(size=1000)
        b = parent.child(1).normal(size=1000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.1

    def test_child_reproducible(self):
        a = RandomSource(7).child(3, 1).uniform(size=5)
        b = RandomSource(7).child(3, 1).uniform(size=5)
        assert np.array_equal(a, b)


class TestSampleRewards:
    def test_zero_variance_returns_means_exactly(self):
        inst = BanditInstance([0.6, 0.3, 0.0, 0.2], [0.2, 0.5, 0.1, 0.0], variance=0.0)
        for arm in range(4):
            pub, priv = sample_rewards(inst, arm, RandomSource(0))
            assert pub == inst.public_means[arm]
            assert priv == inst.private_means[arm]

    def test_law_of_large_numbers(self, instance):
        # 4-sigma tolerance for the mean of 1e6 unit-variance draws
        rng = RandomSource(42)
        n = 10 ** 6
        total = 0.0
        for _ in range(n):
            pub, _ = sample_rewards(instance, 0, rng)
            total += pub
        assert abs(total / n - instance.public_means[0]) < 0.004

    def test_fixed_seed_repeatable(self, instance):
        assert sample_rewards(instance, 0, RandomSource(5)) == sample_rewards(instance, 0, RandomSource(5))

    def test_public_private_independent(self, instance):
        rng = RandomSource(11)
        pairs = np.array([sample_rewards(instance, 2, rng) for _ in range(10 ** 5)])
        corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert abs(corr) < 0.01

    def test_independent_across_steps_and_arms(self, instance):
        # alternate pulls of two arms: no correlation across steps or arms
        rng = RandomSource(12)
        a = np.empty(10 ** 5)
        b = np.empty(10 ** 5)
        for i in range(10 ** 5):
            a[i] = sample_rewards(instance, 0, rng)[0]
            b[i] = sample_rewards(instance, 1, rng)[0]
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
        assert abs(np.corrcoef(a[:-1], a[1:])[0, 1]) < 0.01

    def test_arm_out_of_range(self, instance):
        with pytest.raises(ValueError, match="out of range"):
            sample_rewards(instance, 4, RandomSource(0))
        with pytest.raises(ValueError, match="out of range"):
            sample_rewards(instance, -1, RandomSource(0))


class TestPosterior:
    def test_first_observation(self):
        state = PosteriorState.empty(4)
        new = update_posterior(state, 1, 0.7)
        assert new.counts.tolist() == [0, 1, 0, 0]
        assert new.empirical_means[1] == 0.7
        assert state.counts.sum() == 0  # input untouched

    def test_two_point_average(self):
        state = PosteriorState.empty(2)
        state = update_posterior(state, 0, 0.4)
        state = update_posterior(state, 0, 0.8)
        assert state.empirical_means[0] == pytest.approx(0.6, abs=1e-15)

    def test_running_mean_matches_arithmetic_mean(self):
        # oracle: recompute the mean from the stored reward log
        rng = RandomSource(3)
        state = PosteriorState.empty(3, track_rewards=True)
        for _ in range(500):
            arm = int(rng.integers(0, 3))
            state = update_posterior(state, arm, float(rng.normal()))
        for arm in range(3):
            if state.counts[arm]:
                assert state.empirical_means[arm] == pytest.approx(
                    np.mean(state.reward_log[arm]), abs=1e-12)

    def test_counts_sum_equals_total_updates(self):
        rng = RandomSource(9)
        state = PosteriorState.empty(5)
        for t in range(200):
            state = update_posterior(state, int(rng.integers(0, 5)), float(rng.normal()))
        assert state.total_pulls == 200

    def test_permutation_invariance(self):
        rewards = RandomSource(1).normal(size=64)
        forward = PosteriorState.empty(1)
        for x in rewards:
            forward = update_posterior(forward, 0, float(x))
        backward = PosteriorState.empty(1)
        for x in rewards[::-1]:
            backward = update_posterior(backward, 0, float(x))
        assert forward.empirical_means[0] == pytest.approx(backward.empirical_means[0], abs=1e-9)

    def test_arm_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            update_posterior(PosteriorState.empty(2), 2, 0.0)


class TestSimplexDistribution:
    def test_validates_sum(self):
        with pytest.raises(ValueError, match="sum"):
            SimplexDistribution(np.array([0.5, 0.4]))

    def test_validates_nonnegative(self):
        with pytest.raises(ValueError, match="nonnegative"):
            SimplexDistribution(np.array([1.1, -0.1]))

    def test_sampling_frequencies(self):
        dist = SimplexDistribution(np.array([0.7, 0.2, 0.1]))
        rng = RandomSource(4)
        draws = np.array([dist.sample(rng) for _ in range(20000)])
        freq = np.bincount(draws, minlength=3) / draws.size
        assert np.allclose(freq, dist.probs, atol=0.02)

    def test_point_mass_always_sampled(self):
        dist = SimplexDistribution.point_mass(4, 2)
        rng = RandomSource(0)
        assert all(dist.sample(rng) == 2 for _ in range(100))
