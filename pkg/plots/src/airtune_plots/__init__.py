"""Figure rendering for airtune comparison and sweep CSV outputs."""

from .render import FIGURE_KINDS, PlotDataError, PlotSpec, render

__version__ = "0.1.0"
