"""Figure rendering for heatlab CSV artifacts."""

from .figures import (
    KINDS,
    FigureSpec,
    PlotError,
    RenderResult,
    parse_figure_spec,
    render,
)

__all__ = [
    "KINDS",
    "FigureSpec",
    "PlotError",
    "RenderResult",
    "parse_figure_spec",
    "render",
]

__version__ = "0.1.0"
