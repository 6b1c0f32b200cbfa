"""Deterministic figure rendering for pooled-annuity CLI artifacts."""

from .render import KINDS, PlotSpec, SchemaError, build_figure, load_artifact, render

__all__ = ["KINDS", "PlotSpec", "SchemaError", "build_figure", "load_artifact", "render"]

__version__ = "0.1.0"
