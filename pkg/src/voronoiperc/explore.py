"""Mesoscopic-grid exploration deciding the blue horizontal crossing.

The algorithm queries presence bits of a dense cloud (or color bits of a
fixed point set in the color variant) cell by cell on a lattice of mesh
1/ceil(n^(1/4)), starting from a random vertical line through the
rectangle and growing along discovered blue components.  A cell is safe
once it and its eight neighbors are explored; the tiling inside safe
cells is certain provided no explored cell has a subcell empty of present
points, and the algorithm falls back to querying everything when that
certificate fails.  The output always equals the exact crossing decision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .config import Configuration, Rect
from .crossing import CrossingFrame, has_blue_horizontal_crossing
from .geometry import Scene
from .perturb import TwoStageSample

__all__ = [
    "ExplorationTrace",
    "MesoGrid",
    "RevealmentEstimate",
    "estimate_revealment",
    "mesh_of",
    "run_algorithm",
    "run_algorithm_colors",
]


def mesh_of(n: float) -> float:
    """Lattice mesh 1/ceil(n^(1/4)), exact at integer fourth powers."""
    if n < 1:
        raise ValueError("intensity must be at least 1")
    g = max(1, math.ceil(n ** 0.25))
    while g > 1 and (g - 1) ** 4 >= n:
        g -= 1
    while g ** 4 < n:
        g += 1
    return 1.0 / g


@dataclass(frozen=True)
class MesoGrid:
    """g x g lattice over the unit square, each cell split into 9 subcells."""

    n: float
    g: int

    @classmethod
    def for_intensity(cls, n: float) -> "MesoGrid":
        return cls(n=float(n), g=round(1.0 / mesh_of(n)))

    @property
    def mesh(self) -> float:
        return 1.0 / self.g

    def cell_of(self, xy: np.ndarray) -> np.ndarray:
        """Flat cell index cx*g + cy per point."""
        idx = np.clip((xy * self.g).astype(np.int64), 0, self.g - 1)
        return idx[:, 0] * self.g + idx[:, 1]

    def subcell_of(self, xy: np.ndarray) -> np.ndarray:
        """Flat subcell index on the 3g x 3g lattice."""
        t = 3 * self.g
        idx = np.clip((xy * t).astype(np.int64), 0, t - 1)
        return idx[:, 0] * t + idx[:, 1]

    def subcells_of_cell(self, cells: np.ndarray) -> np.ndarray:
        """The 9 subcell indices of each flat cell index, shape (len, 9)."""
        cx, cy = cells // self.g, cells % self.g
        t = 3 * self.g
        off = np.arange(3)
        sx = 3 * cx[:, None, None] + off[None, :, None]
        sy = 3 * cy[:, None, None] + off[None, None, :]
        return (sx * t + sy).reshape(len(cells), 9)

    def neighbors_plus(self, cells: np.ndarray) -> np.ndarray:
        """Flat indices of each cell and its in-grid 8-neighborhood."""
        cx, cy = cells // self.g, cells % self.g
        off = np.arange(-1, 2)
        nx, ny = np.broadcast_arrays(cx[:, None, None] + off[None, :, None],
                                     cy[:, None, None] + off[None, None, :])
        ok = (nx >= 0) & (nx < self.g) & (ny >= 0) & (ny < self.g)
        return np.unique(nx[ok] * self.g + ny[ok])

    def is_safe(self, explored: np.ndarray) -> np.ndarray:
        """Explored cells whose in-grid neighbors are all explored.

        Missing neighbors outside the square count as vacuously explored.
        """
        grid = np.zeros((self.g + 2, self.g + 2), dtype=bool)
        grid[1:-1, 1:-1] = explored.reshape(self.g, self.g)
        grid[0, :] = grid[-1, :] = True
        grid[:, 0] = grid[:, -1] = True
        safe = np.ones((self.g, self.g), dtype=bool)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                safe &= grid[1 + dx:self.g + 1 + dx, 1 + dy:self.g + 1 + dy]
        return safe.ravel() & explored

    def cells_touching_segment(self, x0: float, c: float, d: float) -> np.ndarray:
        """Flat indices of cells whose closed square meets {x0} x [c,d]."""
        g = self.g
        cols = {min(g - 1, max(0, int(math.floor(x0 * g))))}
        if x0 * g == math.floor(x0 * g) and int(x0 * g) - 1 >= 0:
            cols.add(int(x0 * g) - 1)
        row_lo = max(0, math.ceil(c * g) - 1 if (c * g) == math.floor(c * g) else math.floor(c * g))
        row_hi = min(g - 1, math.floor(d * g))
        rows = np.arange(row_lo, row_hi + 1)
        out = [np.asarray(col) * g + rows for col in sorted(cols)]
        return np.unique(np.concatenate(out))

    def cells_touching_boxes(self, boxes: np.ndarray) -> np.ndarray:
        """Flat indices of cells overlapping any (xmin,ymin,xmax,ymax) box."""
        g = self.g
        found = np.zeros(g * g, dtype=bool)
        for xmin, ymin, xmax, ymax in boxes:
            cx0 = max(0, min(g - 1, int(math.floor(xmin * g))))
            cx1 = max(0, min(g - 1, int(math.floor(xmax * g))))
            cy0 = max(0, min(g - 1, int(math.floor(ymin * g))))
            cy1 = max(0, min(g - 1, int(math.floor(ymax * g))))
            for cx in range(cx0, cx1 + 1):
                found[cx * g + cy0:cx * g + cy1 + 1] = True
        return np.nonzero(found)[0]


@dataclass(frozen=True)
class ExplorationTrace:
    """Record of one exploration run."""

    queried: np.ndarray
    explored_cells: frozenset
    safe_cells: frozenset
    output: int
    full_reveal: bool
    x0: float
    grid: int

    def to_json(self, xy: Optional[np.ndarray] = None) -> str:
        idx = np.sort(self.queried)
        payload = {
            "grid": self.grid,
            "x0": self.x0,
            "output": self.output,
            "full_reveal": self.full_reveal,
            "queried": [int(i) for i in idx],
            "explored_cells": sorted(int(c) for c in self.explored_cells),
            "safe_cells": sorted(int(c) for c in self.safe_cells),
        }
        if xy is not None:
            payload["queried_xy"] = [[float(x), float(y)] for x, y in xy[idx]]
        return json.dumps(payload)


def _draw_x0(rect: Rect, rng: np.random.Generator) -> float:
    w = rect.width
    return rect.a + w / 3.0 + rng.random() * (w / 3.0)


class _Explorer:
    """Shared machinery of the presence and color query variants."""

    def __init__(self, xy: np.ndarray, rect: Rect, grid: MesoGrid):
        self.xy = xy
        self.rect = rect
        self.grid = grid
        self.point_cell = grid.cell_of(xy)
        self.explored = np.zeros(grid.g * grid.g, dtype=bool)
        self.queried = np.zeros(xy.shape[0], dtype=bool)

    def explore(self, cells: np.ndarray) -> int:
        fresh = cells[~self.explored[cells]]
        self.explored[fresh] = True
        if fresh.size:
            self.queried |= np.isin(self.point_cell, fresh)
        return fresh.size

    def has_empty_subcell(self, occupied_sub: np.ndarray) -> bool:
        cells = np.nonzero(self.explored)[0]
        subs = self.grid.subcells_of_cell(cells)
        return not np.isin(subs, occupied_sub).all()

    def trace(self, output: bool, full_reveal: bool, x0: float) -> ExplorationTrace:
        if full_reveal:
            self.queried[:] = True
        explored = frozenset(int(c) for c in np.nonzero(self.explored)[0])
        safe = frozenset(int(c) for c in np.nonzero(self.grid.is_safe(self.explored))[0])
        return ExplorationTrace(
            queried=np.nonzero(self.queried)[0],
            explored_cells=explored,
            safe_cells=safe,
            output=int(output),
            full_reveal=full_reveal,
            x0=x0,
            grid=self.grid.g,
        )


def _component_decision(scene: Scene, frame: CrossingFrame, blue: np.ndarray,
                        x0: float, rect: Rect):
    """Line-seeded blue components: (member mask, crosses left-right)."""
    seg = scene.segment_lengths((x0, rect.c), (x0, rect.d)) > kernels.POS_TOL
    seeds = seg & blue
    if not seeds.any():
        return np.zeros(scene.n, dtype=bool), False
    keep = blue[frame.pairs[:, 0]] & blue[frame.pairs[:, 1]]
    sub = frame.pairs[keep]
    labels = kernels.label_components(
        scene.n, np.ascontiguousarray(sub[:, 0]), np.ascontiguousarray(sub[:, 1]))
    seed_labels = np.zeros(scene.n, dtype=bool)
    seed_labels[labels[seeds]] = True
    members = blue & seed_labels[labels]
    lab_left = np.zeros(scene.n, dtype=bool)
    lab_left[labels[members & frame.left]] = True
    crosses = bool(lab_left[labels[members & frame.right]].any())
    return members, crosses


_GROWTH_CAP_POWER = 2  # hard cap of (cell count)^2 growth iterations


def run_algorithm(ts: TwoStageSample, rect: Rect, rng: Optional[np.random.Generator] = None,
                  x0: Optional[float] = None) -> ExplorationTrace:
    """Decide the blue horizontal crossing of the masked configuration.

    Presence bits of the dense cloud are revealed cell by cell; the
    output always equals the exact crossing decision of the masked
    configuration.
    """
    if ts.dense.is_empty:
        raise ValueError("the dense configuration must be non-empty")
    if x0 is None:
        if rng is None:
            raise ValueError("need an rng when x0 is not supplied")
        x0 = _draw_x0(rect, rng)
    grid = MesoGrid.for_intensity(ts.n)
    ex = _Explorer(ts.dense.xy, rect, grid)

    line_cells = grid.cells_touching_segment(x0, rect.c, rect.d)
    ex.explore(grid.neighbors_plus(line_cells))

    cap = (grid.g * grid.g) ** _GROWTH_CAP_POWER + 2
    for _ in range(cap):
        present = ex.queried & ts.mask
        occupied = np.unique(grid.subcell_of(ts.dense.xy[present]))
        if ex.has_empty_subcell(occupied):
            masked = ts.masked()
            out = has_blue_horizontal_crossing(masked, rect)
            return ex.trace(out, full_reveal=True, x0=x0)
        rev_idx = np.nonzero(present)[0]
        scene = Scene(ts.dense.xy[rev_idx])
        frame = CrossingFrame(scene, rect)
        blue = ts.dense.colors[rev_idx] == 1
        members, crosses = _component_decision(scene, frame, blue, x0, rect)
        if members.any():
            boxes = scene.bboxes[members]
            touched = grid.cells_touching_boxes(boxes)
            grown = ex.explore(grid.neighbors_plus(touched))
        else:
            grown = 0
        if grown == 0:
            return ex.trace(crosses, full_reveal=False, x0=x0)
    raise RuntimeError("exploration failed to converge within the iteration cap")


def run_algorithm_colors(config: Configuration, rect: Rect,
                         rng: Optional[np.random.Generator] = None,
                         x0: Optional[float] = None,
                         scene: Optional[Scene] = None) -> ExplorationTrace:
    """Color-query variant: positions are public, queries reveal colors."""
    if config.is_empty:
        raise ValueError("the configuration must be non-empty")
    if x0 is None:
        if rng is None:
            raise ValueError("need an rng when x0 is not supplied")
        x0 = _draw_x0(rect, rng)
    grid = MesoGrid.for_intensity(config.intensity_used
                                  if config.intensity_used >= 1 else len(config))
    ex = _Explorer(config.xy, rect, grid)
    if scene is None:
        scene = Scene(config.xy)
    frame = CrossingFrame(scene, rect)
    occupied = np.unique(grid.subcell_of(config.xy))
    site_cell = grid.cell_of(config.xy)

    line_cells = grid.cells_touching_segment(x0, rect.c, rect.d)
    ex.explore(grid.neighbors_plus(line_cells))

    cap = (grid.g * grid.g) ** _GROWTH_CAP_POWER + 2
    for _ in range(cap):
        if ex.has_empty_subcell(occupied):
            out = has_blue_horizontal_crossing(config, rect, scene=scene)
            return ex.trace(out, full_reveal=True, x0=x0)
        blue_known = ex.queried & (config.colors == 1)
        members, crosses = _component_decision(scene, frame, blue_known, x0, rect)
        grown = 0
        if members.any():
            boxes = scene.bboxes[members]
            touched = grid.cells_touching_boxes(boxes)
            grown += ex.explore(grid.neighbors_plus(touched))
            # reveal colors of sites whose cells border the component in R
            m0 = members[frame.pairs[:, 0]]
            m1 = members[frame.pairs[:, 1]]
            frontier = np.concatenate([frame.pairs[m0, 1], frame.pairs[m1, 0]])
            frontier_cells = np.unique(site_cell[frontier])
            grown += ex.explore(grid.neighbors_plus(frontier_cells))
        if grown == 0:
            return ex.trace(crosses, full_reveal=False, x0=x0)
    raise RuntimeError("exploration failed to converge within the iteration cap")


@dataclass(frozen=True)
class RevealmentEstimate:
    """Empirical per-point query frequencies and their maximum."""

    frequencies: np.ndarray
    maximum: float
    reps: int


def estimate_revealment(target, rect: Rect, reps: int,
                        rng: np.random.Generator) -> RevealmentEstimate:
    """Query frequency per point over fresh masks (or colors) and lines.

    ``target`` is a TwoStageSample (presence queries, mask redrawn each
    run) or a Configuration (color queries, colors redrawn each run); the
    point positions stay fixed, matching the conditional revealment.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if isinstance(target, TwoStageSample):
        m = len(target.dense)
        counts = np.zeros(m)
        for _ in range(reps):
            mask = rng.random(m) < (1.0 / target.k)
            ts = TwoStageSample(dense=target.dense, mask=mask, k=target.k, n=target.n)
            tr = run_algorithm(ts, rect, rng)
            counts[tr.queried] += 1.0
    elif isinstance(target, Configuration):
        m = len(target)
        counts = np.zeros(m)
        scene = Scene(target.xy)
        p = target.blue_prob_used
        for _ in range(reps):
            colors = (rng.random(m) < p).astype(np.uint8)
            cfg = target.replace(colors=colors)
            tr = run_algorithm_colors(cfg, rect, rng, scene=scene)
            counts[tr.queried] += 1.0
    else:
        raise TypeError("target must be a TwoStageSample or a Configuration")
    freq = counts / reps
    return RevealmentEstimate(frequencies=freq, maximum=float(freq.max()),
                              reps=reps)
