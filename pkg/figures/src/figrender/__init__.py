"""Figure rendering for the unscramble experiment outputs."""

__version__ = "0.1.0"

from .render import EXPECTED_HEADERS, HEATMAP_SCALE, KINDS, FigureSpec, RenderError, render
