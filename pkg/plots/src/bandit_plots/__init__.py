"""Figure rendering for the deceptive-bandits experiment CSVs."""

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, load_curve_csv, load_series_csv, render

__version__ = "0.1.0"
