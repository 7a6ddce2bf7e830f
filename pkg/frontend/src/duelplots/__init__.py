"""Figure rendering for duelsim aggregate CSV output."""

from .figure import AGGREGATE_COLUMNS, FigureSpec, RenderError, build_series, reference_line, render

__all__ = [
    "AGGREGATE_COLUMNS",
    "FigureSpec",
    "RenderError",
    "build_series",
    "reference_line",
    "render",
]

__version__ = "0.1.0"
