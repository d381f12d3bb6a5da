"""Render sample-path, histogram and QQ figures from gpmean output files."""

from .render import FigureJob, parse_case, render

__all__ = ["FigureJob", "parse_case", "render"]
