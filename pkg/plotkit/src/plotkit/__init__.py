"""Offline figure renderer for evolution-simulator CSV outputs."""

from .bins import density_timeline, project_barycentric, tri_cell_index, tri_density
from .render import KINDS, PlotJob, RenderResult, render
from .schemas import SchemaError

__version__ = "0.1.0"
