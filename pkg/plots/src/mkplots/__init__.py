"""Histogram panel rendering for harness CSV outputs."""

from .errors import EmptyGroup, MissingColumn, PlotsError
from .panels import (PanelSpec, histogram_density, normal_density,
                     render_panels, spec_from_csvs)

__all__ = [
    "EmptyGroup",
    "MissingColumn",
    "PanelSpec",
    "PlotsError",
    "histogram_density",
    "normal_density",
    "render_panels",
    "spec_from_csvs",
]

__version__ = "0.1.0"
