"""Render publication-style figures from cyberepi CSV outputs."""

from .render import FigureSpec, SchemaError, load_csv, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "load_csv", "render"]
