"""Rendering tests for every figure kind.

The input CSVs are produced by the deceptive-bandits command line (the only
interface this package consumes), at miniature scale so the whole suite stays
fast.
"""

import shutil
import subprocess

import pytest

from bandit_plots.cli import main
from bandit_plots.figures import FigureSpec, SchemaError, render

PRIMARY_CLI = "deceptive-bandits"


def _run_primary(args):
    exe = shutil.which(PRIMARY_CLI)
    if exe is None:
        pytest.skip(f"{PRIMARY_CLI} CLI is not installed")
    subprocess.run([exe, *args], check=True, capture_output=True, text=True)


@pytest.fixture(scope="session")
def preset_csvs(tmp_path_factory):
    base = tmp_path_factory.mktemp("csv")
    paths = {
        "rate": base / "rate.csv",
        "eps_sweep": base / "eps_sweep.csv",
        "asymmetry_bars": base / "asymmetry.csv",
        "gamma_convergence": base / "gamma.csv",
        "boost_curve": base / "curve.csv",
    }
    _run_primary(["rate", "--preset", "fig1", "--seeds", "2", "--horizon", "3000",
                  "--threads", "1", "--out", str(paths["rate"])])
    _run_primary(["simulate", "--preset", "fig2", "--seeds", "2", "--horizon", "1200",
                  "--threads", "1", "--out", str(paths["eps_sweep"])])
    _run_primary(["simulate", "--preset", "fig3", "--seeds", "2", "--horizon", "1200",
                  "--threads", "1", "--out", str(paths["asymmetry_bars"])])
    _run_primary(["gamma", "--preset", "fig4", "--seeds", "2", "--horizon", "1500",
                  "--threads", "1", "--out", str(paths["gamma_convergence"])])
    _run_primary(["boost-curve", "--epsilon", "0.1", "--points", "40",
                  "--p-min", "1e-8", "--p-max", "0.4", "--out", str(paths["boost_curve"])])
    return paths


@pytest.mark.parametrize("kind", ["rate", "eps_sweep", "asymmetry_bars",
                                  "gamma_convergence", "boost_curve"])
class TestAllKinds:
    def test_renders_without_error(self, preset_csvs, tmp_path, kind):
        out = tmp_path / f"{kind}.png"
        render(FigureSpec(str(preset_csvs[kind]), kind, str(out)))
        assert out.exists() and out.stat().st_size > 5_000

    def test_rerender_is_byte_identical(self, preset_csvs, tmp_path, kind):
        first = tmp_path / "first.png"
        second = tmp_path / "second.png"
        render(FigureSpec(str(preset_csvs[kind]), kind, str(first)))
        render(FigureSpec(str(preset_csvs[kind]), kind, str(second)))
        assert first.read_bytes() == second.read_bytes()


class TestValidation:
    def test_header_mismatch_names_the_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,series,mean,ci_low,ci_high\n1,x,0.1,0.0,0.2\n")
        with pytest.raises(SchemaError, match="column 2"):
            render(FigureSpec(str(bad), "eps_sweep", str(tmp_path / "x.png")))

    def test_empty_file_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            render(FigureSpec(str(empty), "rate", str(tmp_path / "x.png")))

    def test_header_only_rejected(self, tmp_path):
        headed = tmp_path / "headed.csv"
        headed.write_text("time,series_name,mean,ci_low,ci_high\n")
        with pytest.raises(SchemaError, match="no data rows"):
            render(FigureSpec(str(headed), "gamma_convergence", str(tmp_path / "x.png")))

    def test_non_numeric_cell_rejected(self, tmp_path):
        bad = tmp_path / "nan.csv"
        bad.write_text("time,series_name,mean,ci_low,ci_high\n1,x,much,0.0,0.2\n")
        with pytest.raises(SchemaError, match="non-numeric"):
            render(FigureSpec(str(bad), "eps_sweep", str(tmp_path / "x.png")))

    def test_wrong_series_for_bars_rejected(self, tmp_path):
        bad = tmp_path / "wrong.csv"
        bad.write_text("time,series_name,mean,ci_low,ci_high\n1,eps=0,0.1,0.0,0.2\n")
        with pytest.raises(SchemaError, match="share_arm"):
            render(FigureSpec(str(bad), "asymmetry_bars", str(tmp_path / "x.png")))

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="figure kind"):
            FigureSpec("a.csv", "pie", "b.png")

    def test_degenerate_band_renders(self, tmp_path):
        flat = tmp_path / "flat.csv"
        flat.write_text("time,series_name,mean,ci_low,ci_high\n"
                        "1,gap,0.5,0.5,0.5\n2,gap,0.4,0.4,0.4\n")
        out = tmp_path / "flat.png"
        render(FigureSpec(str(flat), "gamma_convergence", str(out)))
        assert out.exists()


class TestCli:
    def test_render_via_cli(self, preset_csvs, tmp_path, capsys):
        out = tmp_path / "cli.png"
        rc = main(["render", "--csv", str(preset_csvs["eps_sweep"]),
                   "--kind", "eps_sweep", "--out", str(out)])
        assert rc == 0
        assert out.exists()

    def test_cli_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        rc = main(["render", "--csv", str(bad), "--kind", "rate",
                   "--out", str(tmp_path / "x.png")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err
