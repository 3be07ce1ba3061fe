"""Selective-influence testing and systems factorial technology toolkit."""

from . import capacity, contrast, curves, geometry, lft, pipeline, simulate, trials

__version__ = "0.1.0"

__all__ = ["capacity", "contrast", "curves", "geometry", "lft", "pipeline",
           "simulate", "trials", "__version__"]
