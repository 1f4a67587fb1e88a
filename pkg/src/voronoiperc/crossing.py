"""Exact crossing decisions on the clipped Voronoi tessellation.

A rectangle is crossed horizontally by blue when some connected component
of blue cells, glued along shared edges of positive length inside the
rectangle, meets both vertical sides in sets of positive length.  Red
vertical crossings are the mirror image.  For configurations in general
position exactly one of the two happens.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .config import Configuration, Rect
from .geometry import Scene

__all__ = [
    "CrossingFrame",
    "has_blue_horizontal_crossing",
    "has_red_vertical_crossing",
]


class CrossingFrame:
    """Color-independent crossing data for one site set and rectangle.

    Separating this from the colors makes repeated decisions cheap when
    only the coloring changes (exact enumeration, monotone couplings).
    """

    def __init__(self, scene: Scene, rect: Rect):
        self.scene = scene
        self.rect = rect
        self.n = scene.n
        lengths = scene.edge_lengths_in(rect)
        self.pairs = scene.edges[lengths > kernels.POS_TOL]
        a, b, c, d = rect.as_tuple()
        tol = kernels.POS_TOL
        self.left = scene.segment_lengths((a, c), (a, d)) > tol
        self.right = scene.segment_lengths((b, c), (b, d)) > tol
        self.bottom = scene.segment_lengths((a, c), (b, c)) > tol
        self.top = scene.segment_lengths((a, d), (b, d)) > tol

    def _connects(self, mask: np.ndarray, src: np.ndarray, dst: np.ndarray) -> bool:
        src = src & mask
        dst = dst & mask
        if not src.any() or not dst.any():
            return False
        keep = mask[self.pairs[:, 0]] & mask[self.pairs[:, 1]]
        sub = self.pairs[keep]
        labels = kernels.label_components(
            self.n, np.ascontiguousarray(sub[:, 0]), np.ascontiguousarray(sub[:, 1]))
        hit = np.zeros(self.n, dtype=bool)
        hit[labels[src]] = True
        return bool(hit[labels[dst]].any())

    def blue_horizontal(self, blue_mask: np.ndarray) -> bool:
        return self._connects(blue_mask, self.left, self.right)

    def red_vertical(self, red_mask: np.ndarray) -> bool:
        return self._connects(red_mask, self.bottom, self.top)


def has_blue_horizontal_crossing(config: Configuration, rect: Rect,
                                 scene: Scene | None = None) -> bool:
    """f_R: does a blue component join the left and right sides of rect?

    The empty configuration is all red, hence never crossed by blue.
    """
    if config.is_empty:
        return False
    if scene is None:
        scene = Scene(config.xy)
    return CrossingFrame(scene, rect).blue_horizontal(config.blue_mask)


def has_red_vertical_crossing(config: Configuration, rect: Rect,
                              scene: Scene | None = None) -> bool:
    """Mirror decision: red component joining bottom and top sides."""
    if config.is_empty:
        return True
    if scene is None:
        scene = Scene(config.xy)
    return CrossingFrame(scene, rect).red_vertical(config.red_mask)
