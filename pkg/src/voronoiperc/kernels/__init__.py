"""Geometry kernel backend selection.

The hot kernels exist twice: a Cython extension (``_cyker``) and a numpy
fallback (``_pyker``).  The compiled backend is preferred when importable;
set VORONOIPERC_BACKEND=python or =compiled to force one.

Contract (shared by both backends; ``indptr``/``indices`` is the CSR
neighbor structure of the sites, int32):

- ``nearest_sites(sites, queries) -> int32[Q]``: nearest site per query,
  exact-distance ties resolve to the lowest site index.
- ``edge_rect_lengths(sites, indptr, indices, edges, a, b, c, d)``:
  length of the shared boundary of each site pair's clipped cells inside
  the rectangle (0 where cells are not adjacent there).
- ``segment_cell_lengths(sites, indptr, indices, x0, y0, x1, y1)``:
  length of the segment's intersection with each clipped cell.
- ``clip_cells(sites, indptr, indices) -> (verts, offsets)``: packed CCW
  cell polygons, the unit square cut by neighbor half-planes.
- ``label_components(n, u, v) -> int32[n]``: component labels; values are
  arbitrary representatives in [0, n), equal label iff same component.
"""

import os

_forced = os.environ.get("VORONOIPERC_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _pyker as _impl
elif _forced == "compiled":
    from . import _cyker as _impl  # type: ignore[attr-defined]
else:
    try:
        from . import _cyker as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pyker as _impl

BACKEND_NAME = _impl.BACKEND_NAME

nearest_sites = _impl.nearest_sites
edge_rect_lengths = _impl.edge_rect_lengths
segment_cell_lengths = _impl.segment_cell_lengths
clip_cells = _impl.clip_cells
label_components = _impl.label_components

#: tolerance below which a shared length does not count as contact
POS_TOL = 1e-12
