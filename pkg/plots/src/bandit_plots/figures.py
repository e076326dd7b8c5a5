"""Render experiment CSVs into the standard figures.

Two input schemas exist, matching the harness's writers exactly:

* series CSV, header ``time,series_name,mean,ci_low,ci_high`` — consumed by
  the ``rate``, ``eps_sweep``, ``asymmetry_bars`` and ``gamma_convergence``
  figure kinds;
* curve CSV, header ``p,q_star,q_hat`` — consumed by ``boost_curve``.

Validation is strict and fails fast with a column-level message; rendering is
pure with respect to the CSV bytes (pinned style, fixed metadata).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .style import BAND_ALPHA, PNG_METADATA, STYLE

FIGURE_KINDS = ("rate", "eps_sweep", "asymmetry_bars", "gamma_convergence", "boost_curve")
SERIES_HEADER = ["time", "series_name", "mean", "ci_low", "ci_high"]
CURVE_HEADER = ["p", "q_star", "q_hat"]


class SchemaError(ValueError):
    """The CSV does not match the expected experiment schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSV, figure kind, output image, axis options."""

    input_csv: str
    figure_kind: str
    output_image: str
    log_y: bool = False
    title: str = ""

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.figure_kind!r}; expected one of {FIGURE_KINDS}")


@dataclass
class Series:
    times: np.ndarray
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


def _check_header(got: list[str], expected: list[str], path):
    if got == expected:
        return
    for i, (g, e) in enumerate(zip(got, expected)):
        if g != e:
            raise SchemaError(f"{path}: column {i + 1} is {g!r}, expected {e!r}")
    raise SchemaError(f"{path}: expected {len(expected)} columns {expected}, got {len(got)}")


def load_series_csv(path) -> dict[str, Series]:
    """Parse and validate a series CSV into per-name arrays (insertion order kept)."""
    rows: dict[str, list[tuple[float, float, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: file is empty")
        _check_header(header, SERIES_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise SchemaError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                t = float(row[0])
                mean, lo, hi = float(row[2]), float(row[3]), float(row[4])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: non-numeric value ({exc})") from None
            rows.setdefault(row[1], []).append((t, mean, lo, hi))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for name, entries in rows.items():
        arr = np.asarray(entries)
        out[name] = Series(times=arr[:, 0], mean=arr[:, 1], ci_low=arr[:, 2], ci_high=arr[:, 3])
    return out


def load_curve_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: file is empty")
        _check_header(header, CURVE_HEADER, path)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise SchemaError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: non-numeric value ({exc})") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return np.asarray(rows)


def _band(ax, series: Series, label: str, color=None, linestyle="-"):
    line, = ax.plot(series.times, series.mean, label=label, color=color, linestyle=linestyle)
    ax.fill_between(series.times, series.ci_low, series.ci_high,
                    color=line.get_color(), alpha=BAND_ALPHA, linewidth=0)
    return line


def _render_rate(ax, data: dict[str, Series]):
    pulls = {name: s for name, s in data.items() if name.startswith("pulls_")}
    if not pulls:
        raise SchemaError("rate figure needs at least one 'pulls_arm*' series")
    for name, series in pulls.items():
        arm = name.removeprefix("pulls_")
        line = _band(ax, series, f"observed {arm}")
        phi_name = f"phi_{arm}"
        if phi_name in data:
            ax.plot(data[phi_name].times, data[phi_name].mean, linestyle="--",
                    color=line.get_color(), label=f"predicted {arm}")
    ax.set_xlabel("step")
    ax.set_ylabel("pulls")


def _render_lines(ax, data: dict[str, Series], ylabel: str):
    for name, series in data.items():
        _band(ax, series, name)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)


def _render_asymmetry_bars(ax, data: dict[str, Series]):
    shares: dict[str, dict[int, Series]] = {}
    for name, series in data.items():
        if "_share_arm" not in name:
            raise SchemaError(f"asymmetry figure expects '*_share_arm*' series, got {name!r}")
        group, arm = name.split("_share_arm")
        shares.setdefault(group, {})[int(arm)] = series
    groups = sorted(shares)
    arms = sorted({a for group in shares.values() for a in group})
    width = 0.8 / len(groups)
    for gi, group in enumerate(groups):
        xs = np.array(arms, dtype=float) + (gi - (len(groups) - 1) / 2) * width
        finals = [shares[group][a].mean[-1] for a in arms]
        errs = [shares[group][a].ci_high[-1] - shares[group][a].mean[-1] for a in arms]
        ax.bar(xs, finals, width=width, yerr=errs, capsize=3, label=group)
    ax.set_xticks(arms)
    ax.set_xticklabels([f"arm {a}" for a in arms])
    ax.set_ylabel("share of samples")


def _render_boost_curve(ax, rows: np.ndarray):
    ax.plot(rows[:, 0], rows[:, 1], label="exact q*")
    ax.plot(rows[:, 0], rows[:, 2], linestyle="--", label="closed-form approximation")
    ax.set_xscale("log")
    ax.set_xlabel("base probability p")
    ax.set_ylabel("boosted probability")


def render(spec: FigureSpec) -> str:
    """Render the figure described by ``spec``; returns the output path."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            if spec.figure_kind == "boost_curve":
                _render_boost_curve(ax, load_curve_csv(spec.input_csv))
            else:
                data = load_series_csv(spec.input_csv)
                if spec.figure_kind == "rate":
                    _render_rate(ax, data)
                elif spec.figure_kind == "eps_sweep":
                    _render_lines(ax, data, "error probability")
                    ax.set_yscale("log")
                elif spec.figure_kind == "asymmetry_bars":
                    _render_asymmetry_bars(ax, data)
                else:
                    _render_lines(ax, data, "exponent gap")
            if spec.log_y and spec.figure_kind != "eps_sweep":
                ax.set_yscale("log")
            if spec.title:
                ax.set_title(spec.title)
            ax.legend()
            out = Path(spec.output_image)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata=dict(PNG_METADATA))
        finally:
            plt.close(fig)
    return str(spec.output_image)
