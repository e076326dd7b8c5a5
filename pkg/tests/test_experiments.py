import math

import numpy as np
import pytest
import yaml

from deceptive_bandits.core import BanditInstance, RandomSource
from deceptive_bandits.experiments import (AggregateSeries, ConfigError, ExperimentConfig,
                                           aggregate, format_epsilon, make_grid,
                                           parse_epsilon, preset, run_experiment,
                                           write_series_csv)


class TestAggregate:
    def test_identical_seeds_degenerate_band(self):
        values = np.tile([1.0, 2.0, 3.0], (5, 1))
        agg = aggregate(values, [10, 20, 30])
        assert np.array_equal(agg.mean, [1.0, 2.0, 3.0])
        assert np.array_equal(agg.ci_low, agg.mean)
        assert np.array_equal(agg.ci_high, agg.mean)

    def test_two_seed_half_width(self):
        # std([0, 2], ddof=1) = sqrt(2); half width = 1.96 * sqrt(2) / sqrt(2) = 1.96
        agg = aggregate(np.array([[0.0], [2.0]]), [1])
        assert agg.mean[0] == 1.0
        assert agg.ci_high[0] - agg.mean[0] == pytest.approx(1.96, rel=1e-12)

    def test_single_seed_warns_and_degenerates(self):
        agg = aggregate(np.array([[0.5, 0.7]]), [1, 2])
        assert agg.single_seed
        assert np.array_equal(agg.ci_low, agg.mean)

    def test_band_ordering(self):
        rng = RandomSource(0)
        values = rng.normal(size=(20, 7))
        agg = aggregate(values, np.arange(7))
        assert (agg.ci_low <= agg.mean).all()
        assert (agg.mean <= agg.ci_high).all()

    def test_coverage_of_known_mean(self):
        # 95% normal CI over 50 Bernoulli(0.5) seeds: coverage close to nominal
        rng = RandomSource(1)
        covered = 0
        trials = 1000
        for _ in range(trials):
            values = (rng.uniform(size=(50, 1)) < 0.5).astype(float)
            agg = aggregate(values, [1])
            covered += agg.ci_low[0] <= 0.5 <= agg.ci_high[0]
        assert 0.92 <= covered / trials <= 0.975


class TestConfig:
    def test_epsilon_parsing(self):
        assert parse_epsilon("inf") == math.inf
        assert parse_epsilon("unconstrained") == math.inf
        assert parse_epsilon("0.001") == 0.001
        assert parse_epsilon(0) == 0.0
        with pytest.raises(ConfigError):
            parse_epsilon("tiny")
        with pytest.raises(ConfigError):
            parse_epsilon(-1)
        assert format_epsilon(math.inf) == "inf"
        assert format_epsilon(1e-3) == "0.001"

    def test_yaml_round_trip(self, tmp_path):
        cfg = preset("fig2", seeds=5, horizon=1000)
        path = tmp_path / "cfg.yaml"
        cfg.to_yaml(path)
        again = ExperimentConfig.from_yaml(path)
        assert again.kind == "eps_sweep"
        assert again.seeds == 5
        assert again.epsilons == cfg.epsilons
        assert np.array_equal(again.instances[0].public_means, cfg.instances[0].public_means)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({"kind": "eps_sweep", "instance": []})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="kind"):
            ExperimentConfig(kind="mystery")

    def test_invalid_instance_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(kind="eps_sweep",
                             instances=[{"public_means": [1.0], "private_means": [1.0]}])

    def test_missing_instances_rejected(self):
        with pytest.raises(ConfigError, match="instance"):
            ExperimentConfig(kind="eps_sweep", instances=[])

    def test_make_grid_contains_endpoint(self):
        grid = make_grid(100_000, 1000, 4)
        assert grid[-1] == 100_000
        assert 10_000 in grid
        assert (grid > 4).all()


class TestDrivers:
    def test_eps_sweep_csv_schema_and_rerun(self, tmp_path):
        out = tmp_path / "sweep.csv"
        cfg = preset("fig2", seeds=3, horizon=1500, threads=1, grid_points=10,
                     output_path=str(out))
        result = run_experiment(cfg)
        assert result.audit["kl_ok"] and result.audit["eps_zero_bitwise"]
        text = out.read_text()
        lines = text.splitlines()
        assert lines[0] == "time,series_name,mean,ci_low,ci_high"
        assert len(result.series) == 6
        # byte-identical rerun
        out2 = tmp_path / "sweep2.csv"
        cfg2 = preset("fig2", seeds=3, horizon=1500, threads=2, grid_points=10,
                      output_path=str(out2))
        run_experiment(cfg2)
        assert out.read_bytes() == out2.read_bytes()

    def test_rate_driver_has_phi_series(self, tmp_path):
        cfg = preset("fig1", seeds=2, horizon=4000, threads=1, grid_points=8)
        result = run_experiment(cfg)
        for arm in (1, 2, 3):
            assert f"pulls_arm{arm}" in result.series
            assert f"phi_arm{arm}" in result.series
        phi = result.series["phi_arm1"]
        expect = math.sqrt(4 * 0.1 * (1 / 3) * 4000) / 0.3
        assert phi.mean[-1] == pytest.approx(expect, rel=1e-12)
        assert result.audit["kl_ok"]

    def test_asymmetry_driver_series(self):
        cfg = preset("fig3", seeds=2, horizon=1200, threads=1, grid_points=6)
        result = run_experiment(cfg)
        assert len(result.series) == 8
        final_shares = [result.series[f"inst1_share_arm{a}"].mean[-1] for a in range(4)]
        assert sum(final_shares) == pytest.approx(1.0, abs=1e-9)

    def test_gamma_driver_gap_positive(self):
        cfg = preset("fig4", seeds=2, horizon=2500, threads=1, grid_points=6)
        result = run_experiment(cfg)
        for name in ("inst1_gamma_gap", "inst2_gamma_gap"):
            assert (result.series[name].mean >= -1e-12).all()
        assert result.extra["inst1_solution"].case == "interior"

    def test_decay_driver(self):
        cfg = ExperimentConfig(kind="decay", seeds=4, horizon=10_000, threads=1,
                               grid_points=5, decay_c=1.0, decay_m0=1.0)
        result = run_experiment(cfg)
        ratio = result.series["m_t"].mean[-1] / result.series["sqrt_2ct"].mean[-1]
        assert 0.7 < ratio < 1.3

    def test_boost_curve_driver(self, tmp_path):
        out = tmp_path / "curve.csv"
        cfg = ExperimentConfig(kind="boost_curve", epsilons=[0.1], curve_p_min=1e-6,
                               curve_p_max=0.3, curve_points=11, output_path=str(out))
        result = run_experiment(cfg)
        lines = out.read_text().splitlines()
        assert lines[0] == "p,q_star,q_hat"
        assert len(lines) == 12
        rows = result.extra["curve"]
        assert (rows[:, 2] <= rows[:, 1] + 1e-9).all()

    def test_allocate_driver(self, tmp_path):
        out = tmp_path / "alloc.csv"
        cfg = ExperimentConfig(kind="allocate",
                               instances=[BanditInstance([0.6, 0.3, 0.1], [0.2, 0.5, 0.3])],
                               output_path=str(out))
        result = run_experiment(cfg)
        sol = result.extra["inst1"]
        assert sol.case == "interior"
        text = out.read_text()
        assert text.startswith("instance,key,value")
        assert "inst1,gamma_star," in text
