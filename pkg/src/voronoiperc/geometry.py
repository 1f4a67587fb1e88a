"""Voronoi tessellations of colored configurations, clipped to the square.

The neighbor structure comes from a Delaunay triangulation (the cell of a
site is the square cut by the half-planes toward its Delaunay neighbors).
Degenerate inputs (fewer than three sites, collinear sites) fall back to
the complete neighbor graph, which is exact for any site count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay, QhullError

from . import kernels
from .config import Configuration, Rect

__all__ = [
    "DegenerateSitesWarning",
    "Scene",
    "Tessellation",
    "build_tessellation",
    "max_cell_radius",
]


class DegenerateSitesWarning(UserWarning):
    """Two sites coincided exactly; deterministic jitter was applied."""


_JITTER_SCALE = 1e-15


def _resolve_duplicates(xy: np.ndarray) -> tuple[np.ndarray, bool]:
    """Perturb exact duplicates by an index-derived jitter of 1e-15 scale."""
    if xy.shape[0] < 2:
        return xy, False
    _, first = np.unique(xy, axis=0, return_index=True)
    if first.size == xy.shape[0]:
        return xy, False
    dup = np.ones(xy.shape[0], dtype=bool)
    dup[first] = False
    out = xy.copy()
    for i in np.nonzero(dup)[0]:
        angle = 2.399963229728653 * (i + 1)  # golden angle spreads directions
        out[i, 0] = min(1.0, max(0.0, out[i, 0] + _JITTER_SCALE * (i + 1) * math.cos(angle)))
        out[i, 1] = min(1.0, max(0.0, out[i, 1] + _JITTER_SCALE * (i + 1) * math.sin(angle)))
    warnings.warn("coincident sites perturbed by deterministic jitter",
                  DegenerateSitesWarning, stacklevel=3)
    return out, True


def _complete_csr(n: int) -> tuple[np.ndarray, np.ndarray]:
    indptr = (np.arange(n + 1) * (n - 1)).astype(np.int32)
    if n <= 1:
        return indptr, np.empty(0, dtype=np.int32)
    grid = np.broadcast_to(np.arange(n, dtype=np.int32), (n, n))
    mask = ~np.eye(n, dtype=bool)
    return indptr, grid[mask].astype(np.int32)


class Scene:
    """Cached geometry of one site set: neighbors, shared edges, polygons."""

    def __init__(self, xy: np.ndarray):
        xy = np.ascontiguousarray(xy, dtype=np.float64).reshape(-1, 2)
        self.xy, self.jittered = _resolve_duplicates(xy)
        self.n = self.xy.shape[0]
        self._edge_cache: dict[tuple, np.ndarray] = {}

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n <= 3:
            return _complete_csr(self.n)
        try:
            tri = Delaunay(self.xy)
            indptr, indices = tri.vertex_neighbor_vertices
            return indptr.astype(np.int32), indices.astype(np.int32)
        except QhullError:
            return _complete_csr(self.n)

    @property
    def indptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Neighbor pairs (i < j), shape (E, 2) int64."""
        indptr, indices = self._csr
        deg = indptr[1:] - indptr[:-1]
        owner = np.repeat(np.arange(self.n), deg)
        mask = owner < indices
        return np.column_stack([owner[mask], indices[mask]]).astype(np.int64)

    def edge_lengths_in(self, rect: Rect) -> np.ndarray:
        """Shared-edge length inside ``rect`` for every neighbor pair."""
        key = rect.as_tuple()
        if key not in self._edge_cache:
            indptr, indices = self._csr
            self._edge_cache[key] = kernels.edge_rect_lengths(
                self.xy, indptr, indices, self.edges, *key)
        return self._edge_cache[key]

    def segment_lengths(self, p0, p1) -> np.ndarray:
        """Per-cell length of the segment's intersection with the cell."""
        indptr, indices = self._csr
        return kernels.segment_cell_lengths(
            self.xy, indptr, indices, p0[0], p0[1], p1[0], p1[1])

    @cached_property
    def polygons(self) -> tuple[np.ndarray, np.ndarray]:
        """Packed cell polygons as (verts, offsets)."""
        indptr, indices = self._csr
        return kernels.clip_cells(self.xy, indptr, indices)

    @cached_property
    def areas(self) -> np.ndarray:
        verts, offsets = self.polygons
        t = verts.shape[0]
        nxt = np.arange(1, t + 1)
        nxt[offsets[1:] - 1] = offsets[:-1]
        cross = verts[:, 0] * verts[nxt, 1] - verts[nxt, 0] * verts[:, 1]
        sums = np.add.reduceat(cross, offsets[:-1]) if t else np.zeros(self.n)
        counts = offsets[1:] - offsets[:-1]
        sums = np.where(counts > 0, sums, 0.0)
        return 0.5 * sums

    @cached_property
    def radii(self) -> np.ndarray:
        """Max distance from each site to a vertex of its clipped cell."""
        verts, offsets = self.polygons
        counts = offsets[1:] - offsets[:-1]
        owner = np.repeat(np.arange(self.n), counts)
        d = np.hypot(verts[:, 0] - self.xy[owner, 0], verts[:, 1] - self.xy[owner, 1])
        out = np.zeros(self.n)
        np.maximum.at(out, owner, d)
        return out

    @cached_property
    def bboxes(self) -> np.ndarray:
        """Per-cell (xmin, ymin, xmax, ymax)."""
        verts, offsets = self.polygons
        counts = offsets[1:] - offsets[:-1]
        owner = np.repeat(np.arange(self.n), counts)
        out = np.empty((self.n, 4))
        out[:, :2] = np.inf
        out[:, 2:] = -np.inf
        np.minimum.at(out[:, 0], owner, verts[:, 0])
        np.minimum.at(out[:, 1], owner, verts[:, 1])
        np.maximum.at(out[:, 2], owner, verts[:, 0])
        np.maximum.at(out[:, 3], owner, verts[:, 1])
        return out

    def nearest(self, queries: np.ndarray) -> np.ndarray:
        return kernels.nearest_sites(self.xy, np.atleast_2d(queries))


@dataclass(frozen=True)
class Tessellation:
    """Clipped Voronoi cells with positive-length adjacency."""

    config: Configuration
    scene: Scene
    adjacency: frozenset

    @property
    def jittered(self) -> bool:
        return self.scene.jittered

    @property
    def cells(self) -> list[np.ndarray]:
        verts, offsets = self.scene.polygons
        return [verts[offsets[i]:offsets[i + 1]] for i in range(self.scene.n)]

    def cell_areas(self) -> np.ndarray:
        return self.scene.areas

    def cell_radii(self) -> np.ndarray:
        return self.scene.radii

    def nearest_site(self, q) -> int:
        return int(self.scene.nearest(np.asarray(q, dtype=float))[0])

    def to_polygon_csv(self, path_or_buf) -> None:
        """Debug export: one row per polygon vertex (site, seq, x, y)."""
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            f = open(path_or_buf, "w")
            close = True
        else:
            f = path_or_buf
        try:
            f.write("site,seq,x,y\n")
            for i, poly in enumerate(self.cells):
                for s, (x, y) in enumerate(poly):
                    f.write(f"{i},{s},{float(x)!r},{float(y)!r}\n")
        finally:
            if close:
                f.close()


def build_tessellation(config: Configuration) -> Tessellation:
    """Clipped cells plus the adjacency of positive-length shared edges."""
    if config.is_empty:
        raise ValueError("tessellation requires a non-empty configuration")
    scene = Scene(config.xy)
    lengths = scene.edge_lengths_in(Rect.unit())
    pairs = scene.edges[lengths > kernels.POS_TOL]
    adjacency = frozenset((int(i), int(j)) for i, j in pairs)
    return Tessellation(config=config, scene=scene, adjacency=adjacency)


def max_cell_radius(config: Configuration, scene: Scene | None = None) -> float:
    """Largest site-to-vertex distance over all clipped cells."""
    if config.is_empty:
        raise ValueError("max_cell_radius requires a non-empty configuration")
    if scene is None:
        scene = Scene(config.xy)
    return float(scene.radii.max())
