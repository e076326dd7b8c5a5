"""Pinned plotting style: one place controls every figure's look.

Rendering must be reproducible byte for byte, so everything visual (sizes,
fonts, colors, dpi) is fixed here rather than inherited from user rc files.
"""

from cycler import cycler

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 144,
    "savefig.dpi": 144,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.6,
    "legend.fontsize": 8.5,
    "legend.framealpha": 0.9,
    "lines.linewidth": 1.6,
    "axes.prop_cycle": cycler(
        color=["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]),
}

BAND_ALPHA = 0.25

# fixed PNG metadata so repeated renders of the same CSV are byte-identical
PNG_METADATA = {"Software": "bandit-plots"}
