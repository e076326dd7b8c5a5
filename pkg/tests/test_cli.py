import subprocess
import sys

import yaml

from deceptive_bandits.cli import main


class TestCli:
    def test_allocate_preset(self, capsys):
        assert main(["allocate", "--preset", "fig4"]) == 0
        out = capsys.readouterr().out
        assert "gamma_star" in out and "inst2" in out

    def test_boost_curve_to_file(self, tmp_path):
        out = tmp_path / "curve.csv"
        rc = main(["boost-curve", "--epsilon", "0.1", "--points", "8",
                   "--p-min", "1e-6", "--p-max", "0.3", "--out", str(out)])
        assert rc == 0
        assert out.read_text().startswith("p,q_star,q_hat")

    def test_simulate_with_config_file(self, tmp_path, capsys):
        cfg = {
            "kind": "eps_sweep",
            "instances": [{"public_means": [0.6, 0.3, 0.0, 0.2],
                           "private_means": [0.2, 0.5, 0.1, 0.0]}],
            "epsilons": [0, "inf"],
            "seeds": 2,
            "horizon": 800,
            "grid_points": 4,
            "threads": 1,
        }
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        out = tmp_path / "out.csv"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
        assert out.exists()
        printed = capsys.readouterr().out
        assert "eps=inf" in printed

    def test_rate_decay_kind(self, tmp_path):
        out = tmp_path / "decay.csv"
        rc = main(["rate", "--kind", "decay", "--seeds", "3", "--horizon", "2000",
                   "--c", "1.0", "--m0", "1.0", "--threads", "1", "--out", str(out)])
        assert rc == 0
        assert "m_t" in out.read_text()

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({"kind": "nope"}))
        assert main(["simulate", "--config", str(path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_and_preset(self, capsys):
        assert main(["simulate"]) == 2
        assert "preset" in capsys.readouterr().err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "deceptive_bandits", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "boost-curve" in proc.stdout
