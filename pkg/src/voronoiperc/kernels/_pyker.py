"""Pure numpy/scipy implementations of the geometry kernels.

Selected at import time when the compiled extension is unavailable (or
forced via VORONOIPERC_BACKEND=python).  Semantics match the compiled
kernels; see kernels/__init__.py for the contract of each function.

Cells are always understood as Voronoi cells clipped to the unit square,
with the neighbor structure supplied as a CSR array pair (indptr,
indices).  For point sets in general position the Delaunay neighbors are
exactly the sites whose half-planes carve the cell.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

BACKEND_NAME = "python"

_DEAD = 1e-12  # B==0 constraints with A above this kill the interval


def nearest_sites(sites: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Index of the nearest site per query point, ties to the lowest index."""
    n = sites.shape[0]
    if n == 0:
        raise ValueError("nearest_sites requires at least one site")
    q = np.atleast_2d(queries)
    if q.shape[0] == 0:
        return np.empty(0, dtype=np.int32)
    k = min(4, n)
    dist, idx = cKDTree(sites).query(q, k=k)
    if k == 1:
        return idx.astype(np.int32)
    # exact-distance ties resolve to the lowest site index
    tied = dist == dist[:, :1]
    cand = np.where(tied, idx, n)
    return cand.min(axis=1).astype(np.int32)


def _halfplane(sites, base, other):
    """Constraint h(y) = g . y - c <= 0 for 'closer to base than other'."""
    g = 2.0 * (sites[other] - sites[base])
    c = np.einsum("ij,ij->i", sites[other], sites[other]) - np.einsum(
        "ij,ij->i", sites[base], sites[base]
    )
    return g, c


def _ragged_neighbors(indptr, indices, keys):
    """Concatenate neighbor lists of ``keys``; returns (values, lengths)."""
    deg = indptr[1:] - indptr[:-1]
    lens = deg[keys]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype), lens
    first = np.cumsum(lens) - lens
    pos = np.arange(total) - np.repeat(first, lens)
    flat = np.repeat(indptr[keys], lens) + pos
    return indices[flat], lens


def _interval_clip(lo, hi, owner, nconstr, A, B, dead_mark):
    """Tighten per-owner intervals [lo,hi] with constraints A + B*t <= 0."""
    ncon = A.shape[0]
    if ncon == 0:
        return lo, hi
    t = np.full(ncon, np.nan)
    nz = B != 0.0
    t[nz] = -A[nz] / B[nz]
    hi_cand = np.where(B > 0.0, t, np.inf)
    lo_cand = np.where(B < 0.0, t, -np.inf)
    # grouped min/max; constraint blocks are contiguous per owner
    starts = np.cumsum(nconstr) - nconstr
    nonempty = nconstr > 0
    if nonempty.any():
        red_idx = starts[nonempty]
        hi[nonempty] = np.minimum(hi[nonempty], np.minimum.reduceat(hi_cand, red_idx))
        lo[nonempty] = np.maximum(lo[nonempty], np.maximum.reduceat(lo_cand, red_idx))
    dead = (~nz) & (A > dead_mark)
    if dead.any():
        hi[np.unique(owner[dead])] = -np.inf
    return lo, hi


def edge_rect_lengths(sites, indptr, indices, edges, a, b, c, d) -> np.ndarray:
    """Length of each pair's shared cell boundary inside [a,b]x[c,d].

    ``edges`` are site-index pairs (typically Delaunay edges).  The shared
    boundary is the bisector segment carved by both endpoints' neighbor
    half-planes, clipped to the rectangle.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    ne = edges.shape[0]
    if ne == 0:
        return np.empty(0)
    i, j = edges[:, 0], edges[:, 1]
    mid = 0.5 * (sites[i] + sites[j])
    delta = sites[j] - sites[i]
    dvec = np.column_stack([-delta[:, 1], delta[:, 0]])
    speed = np.hypot(dvec[:, 0], dvec[:, 1])

    lo = np.full(ne, -np.inf)
    hi = np.full(ne, np.inf)
    # rectangle bounds, one axis at a time
    for axis, (lo_b, hi_b) in enumerate(((a, b), (c, d))):
        pos, vel = mid[:, axis], dvec[:, axis]
        nz = vel != 0.0
        t1 = np.where(nz, (lo_b - pos) / np.where(nz, vel, 1.0), np.nan)
        t2 = np.where(nz, (hi_b - pos) / np.where(nz, vel, 1.0), np.nan)
        lo = np.where(nz, np.maximum(lo, np.minimum(t1, t2)), lo)
        hi = np.where(nz, np.minimum(hi, np.maximum(t1, t2)), hi)
        outside = (~nz) & ((pos < lo_b) | (pos > hi_b))
        hi[outside] = -np.inf

    # half-plane constraints from both endpoints' neighbor lists
    nb_i, len_i = _ragged_neighbors(indptr, indices, i)
    nb_j, len_j = _ragged_neighbors(indptr, indices, j)
    ncon = len_i + len_j
    total = int(ncon.sum())
    if total:
        starts = np.cumsum(ncon) - ncon
        others = np.empty(total, dtype=np.int64)
        fi = np.cumsum(len_i) - len_i
        fj = np.cumsum(len_j) - len_j
        put_i = np.repeat(starts, len_i) + (np.arange(int(len_i.sum())) - np.repeat(fi, len_i))
        put_j = (np.repeat(starts + len_i, len_j)
                 + (np.arange(int(len_j.sum())) - np.repeat(fj, len_j)))
        others[put_i] = nb_i
        others[put_j] = nb_j
        owner = np.repeat(np.arange(ne), ncon)
        base = i[owner]
        g, cc = _halfplane(sites, base, others)
        A = np.einsum("ij,ij->i", g, mid[owner]) - cc
        B = np.einsum("ij,ij->i", g, dvec[owner])
        lo, hi = _interval_clip(lo, hi, owner, ncon, A, B, _DEAD)

    return np.maximum(0.0, hi - lo) * speed


def segment_cell_lengths(sites, indptr, indices, x0, y0, x1, y1) -> np.ndarray:
    """Length of the segment (x0,y0)->(x1,y1) inside each clipped cell."""
    n = sites.shape[0]
    p0 = np.asarray([x0, y0], dtype=np.float64)
    p1 = np.asarray([x1, y1], dtype=np.float64)
    dvec = p1 - p0
    speed = float(np.hypot(*dvec))
    lo = np.zeros(n)
    hi = np.ones(n)
    keys = np.arange(n)
    others, ncon = _ragged_neighbors(indptr, indices, keys)
    if others.size:
        owner = np.repeat(keys, ncon)
        g, cc = _halfplane(sites, owner, others)
        A = g @ p0 - cc
        B = g @ dvec
        lo, hi = _interval_clip(lo, hi, owner, ncon, A, B, _DEAD)
    return np.maximum(0.0, hi - lo) * speed


_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def clip_cells(sites, indptr, indices):
    """Clip the unit square by each site's neighbor half-planes.

    Returns packed CCW polygons: (verts (T,2), offsets (N+1,)) with the
    cell of site ``s`` at verts[offsets[s]:offsets[s+1]].
    """
    n = sites.shape[0]
    deg = indptr[1:] - indptr[:-1]
    maxdeg = int(deg.max()) if n else 0
    m = 5 + maxdeg  # convex clip adds at most one vertex per half-plane
    poly = np.empty((n, m, 2))
    poly[:, :4] = _SQUARE
    counts = np.full(n, 4, dtype=np.int64)

    for r in range(maxdeg):
        act = np.nonzero(deg > r)[0]
        if act.size == 0:
            break
        other = indices[indptr[act] + r]
        g, c = _halfplane(sites, act, other)
        sub = poly[act]
        vcount = counts[act]
        jj = np.arange(m)
        valid = jj[None, :] < vcount[:, None]
        s = np.einsum("ik,ijk->ij", g, sub) - c[:, None]
        jn = jj[None, :] + 1
        jn = np.where(jn >= vcount[:, None], 0, jn)
        s_next = np.take_along_axis(s, jn, axis=1)
        v_next = np.take_along_axis(sub, jn[:, :, None], axis=1)

        keep = (s <= 0.0) & valid
        cross = ((s <= 0.0) != (s_next <= 0.0)) & valid
        denom = s - s_next
        denom = np.where(denom == 0.0, 1.0, denom)
        t = s / denom
        pt = sub + t[:, :, None] * (v_next - sub)

        emit = keep.astype(np.int64) + cross.astype(np.int64)
        new_counts = emit.sum(axis=1)
        offs = np.cumsum(emit, axis=1) - emit
        out = np.empty_like(sub)
        rows = np.repeat(np.arange(act.size), m).reshape(act.size, m)
        kr, kc = rows[keep], offs[keep]
        out[kr, kc] = sub[keep]
        cr = rows[cross]
        ccol = offs[cross] + keep[cross].astype(np.int64)
        out[cr, ccol] = pt[cross]
        poly[act] = out
        counts[act] = new_counts

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    verts = np.empty((total, 2))
    valid = np.arange(m)[None, :] < counts[:, None]
    verts[:] = poly[valid]
    return verts, offsets.astype(np.int32)


def label_components(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Connected-component labels of an undirected graph on n nodes."""
    if n == 0:
        return np.empty(0, dtype=np.int32)
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.size == 0:
        return np.arange(n, dtype=np.int32)
    data = np.ones(u.size, dtype=np.int8)
    graph = coo_matrix((data, (u, v)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels.astype(np.int32)
