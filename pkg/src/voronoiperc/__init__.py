"""Poisson Voronoi percolation on the unit square.

Simulation library and batch-experiment CLI: exact crossing decisions on
clipped Voronoi tessellations, a rasterization oracle, perturbation
couplings that preserve the sampling law, a mesoscopic-grid exploration
algorithm with revealment tracing, and Monte Carlo plus exact
small-instance estimators.
"""

from .config import Color, Configuration, Point, Rect, color_of, sample_configuration
from .crossing import has_blue_horizontal_crossing, has_red_vertical_crossing
from .geometry import Tessellation, build_tessellation, max_cell_radius
from .kernels import BACKEND_NAME
from .raster import CrossingResult, UnresolvedAtCapError, raster_crossing_oracle

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Color",
    "Configuration",
    "CrossingResult",
    "Point",
    "Rect",
    "Tessellation",
    "UnresolvedAtCapError",
    "build_tessellation",
    "color_of",
    "has_blue_horizontal_crossing",
    "has_red_vertical_crossing",
    "max_cell_radius",
    "raster_crossing_oracle",
    "sample_configuration",
    "__version__",
]
