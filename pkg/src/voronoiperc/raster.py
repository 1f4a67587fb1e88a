"""Rasterization oracle for crossing decisions.

Pixel centers over the rectangle are colored by nearest site; a blue
horizontal crossing is a 4-connected pixel path from the left to the
right column, a red vertical crossing an 8-connected path from the bottom
to the top row.  The 4/8 pairing preserves discrete duality, so exactly
one of the two holds at every resolution.  The oracle doubles the
resolution until two successive answers agree.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import kernels
from .config import Color, Configuration, Rect

__all__ = [
    "CrossingResult",
    "UnresolvedAtCapError",
    "raster_crossing_at",
    "raster_crossing_oracle",
    "raster_scan",
]

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
_EIGHT = np.ones((3, 3), dtype=np.uint8)

_CHUNK = 1 << 20  # pixels per nearest-site batch


class CrossingResult(NamedTuple):
    blue_horizontal: bool
    red_vertical: bool


class UnresolvedAtCapError(RuntimeError):
    """Successive raster answers still disagree at the resolution cap."""

    def __init__(self, history):
        super().__init__(f"raster oracle unresolved at cap "
                         f"(last resolution {history[-1][0]})")
        self.history = history


def _blue_mask(config: Configuration, rect: Rect, resolution: int) -> np.ndarray:
    """(res, res) boolean array, [iy, ix] layout, True where blue."""
    a, b, c, d = rect.as_tuple()
    xs = a + (np.arange(resolution) + 0.5) * (b - a) / resolution
    ys = c + (np.arange(resolution) + 0.5) * (d - c) / resolution
    gx, gy = np.meshgrid(xs, ys)  # [iy, ix]
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    blue = np.empty(pts.shape[0], dtype=bool)
    colors = config.colors
    for start in range(0, pts.shape[0], _CHUNK):
        block = np.ascontiguousarray(pts[start:start + _CHUNK])
        idx = kernels.nearest_sites(config.xy, block)
        blue[start:start + _CHUNK] = colors[idx] == Color.BLUE
    return blue.reshape(resolution, resolution)


def _edge_to_edge(mask: np.ndarray, structure: np.ndarray, axis: int) -> bool:
    """Connected path between the two extreme slices along ``axis``."""
    if not mask.any():
        return False
    labels, _ = ndimage.label(mask, structure=structure)
    if axis == 0:  # bottom row to top row
        first, last = labels[0, :], labels[-1, :]
    else:  # left column to right column
        first, last = labels[:, 0], labels[:, -1]
    lo = np.unique(first[first > 0])
    hi = np.unique(last[last > 0])
    return bool(np.intersect1d(lo, hi, assume_unique=True).size)


def raster_crossing_at(config: Configuration, rect: Rect,
                       resolution: int) -> CrossingResult:
    """Crossing decision on one fixed pixel grid."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if config.is_empty:
        return CrossingResult(blue_horizontal=False, red_vertical=True)
    blue = _blue_mask(config, rect, resolution)
    return CrossingResult(
        blue_horizontal=_edge_to_edge(blue, _FOUR, axis=1),
        red_vertical=_edge_to_edge(~blue, _EIGHT, axis=0),
    )


def raster_scan(config: Configuration, rect: Rect, resolution: int = 64,
                cap: int = 4096) -> list[tuple[int, CrossingResult]]:
    """Answers at resolution, 2*resolution, ... until agreement or cap."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    history = []
    res = resolution
    while res <= cap:
        history.append((res, raster_crossing_at(config, rect, res)))
        if len(history) >= 2 and history[-1][1] == history[-2][1]:
            return history
        res *= 2
    raise UnresolvedAtCapError(history)


def raster_crossing_oracle(config: Configuration, rect: Rect,
                           resolution: int = 64, cap: int = 4096) -> CrossingResult:
    """Converged raster decision (two successive resolutions agreeing)."""
    return raster_scan(config, rect, resolution, cap)[-1][1]
