# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels.

Same contracts as the python fallback (see kernels/__init__.py).  Nearest
site queries use a uniform bucket grid sized ~sqrt(count) per axis, which
gives expected O(1) lookups at Poisson density.
"""

from libc.math cimport INFINITY, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "compiled"

cdef double _DEAD = 1e-12


# ---------------------------------------------------------------------------
# nearest sites via bucket grid

def nearest_sites(const double[:, ::1] sites, const double[:, ::1] queries):
    cdef Py_ssize_t n = sites.shape[0]
    cdef Py_ssize_t nq = queries.shape[0]
    if n == 0:
        raise ValueError("nearest_sites requires at least one site")
    out_arr = np.empty(nq, dtype=np.int32)
    if nq == 0:
        return out_arr
    cdef int[::1] out = out_arr

    cdef int nb = <int>sqrt(<double>n)
    if nb < 1:
        nb = 1
    cdef double w = 1.0 / nb

    # bucket CSR, filled in site order so buckets scan by ascending index
    cdef int* head = <int*>malloc((nb * nb + 1) * sizeof(int))
    cdef int* slot = <int*>malloc(n * sizeof(int))
    cdef int* order = <int*>malloc(n * sizeof(int))
    if head == NULL or slot == NULL or order == NULL:
        free(head); free(slot); free(order)
        raise MemoryError
    cdef Py_ssize_t s, q
    cdef int bx, by, code, k
    for k in range(nb * nb + 1):
        head[k] = 0
    for s in range(n):
        bx = <int>(sites[s, 0] * nb)
        if bx >= nb: bx = nb - 1
        if bx < 0: bx = 0
        by = <int>(sites[s, 1] * nb)
        if by >= nb: by = nb - 1
        if by < 0: by = 0
        code = bx * nb + by
        slot[s] = code
        head[code + 1] += 1
    for k in range(nb * nb):
        head[k + 1] += head[k]
    cdef int* cursor = <int*>malloc((nb * nb) * sizeof(int))
    if cursor == NULL:
        free(head); free(slot); free(order)
        raise MemoryError
    for k in range(nb * nb):
        cursor[k] = head[k]
    for s in range(n):
        order[cursor[slot[s]]] = <int>s
        cursor[slot[s]] += 1
    free(cursor)

    cdef double qx, qy, dx, dy, d2, best, ring_min
    cdef int best_idx, qbx, qby, r, cx, cy, lo0, hi0, p, idx
    cdef bint on_rim
    with nogil:
        for q in range(nq):
            qx = queries[q, 0]
            qy = queries[q, 1]
            qbx = <int>(qx * nb)
            if qbx >= nb: qbx = nb - 1
            if qbx < 0: qbx = 0
            qby = <int>(qy * nb)
            if qby >= nb: qby = nb - 1
            if qby < 0: qby = 0
            best = INFINITY
            best_idx = -1
            r = 0
            while True:
                if r > 0:
                    ring_min = (r - 1) * w
                    if best_idx >= 0 and best <= ring_min * ring_min:
                        break
                    if qbx - r < 0 and qbx + r >= nb and qby - r < 0 and qby + r >= nb:
                        break
                for cx in range(qbx - r, qbx + r + 1):
                    if cx < 0 or cx >= nb:
                        continue
                    for cy in range(qby - r, qby + r + 1):
                        if cy < 0 or cy >= nb:
                            continue
                        on_rim = (cx == qbx - r or cx == qbx + r or
                                  cy == qby - r or cy == qby + r)
                        if not on_rim:
                            continue
                        code = cx * nb + cy
                        for p in range(head[code], head[code + 1]):
                            idx = order[p]
                            dx = sites[idx, 0] - qx
                            dy = sites[idx, 1] - qy
                            d2 = dx * dx + dy * dy
                            if d2 < best or (d2 == best and idx < best_idx):
                                best = d2
                                best_idx = idx
                r += 1
            out[q] = best_idx
    free(head); free(slot); free(order)
    return out_arr


# ---------------------------------------------------------------------------
# interval clipping along a parametrized line

cdef inline void _apply_halfplane(double px, double py, double dx, double dy,
                                  double gx, double gy, double c,
                                  double* lo, double* hi) nogil:
    # constraint g.(p + t d) - c <= 0
    cdef double A = gx * px + gy * py - c
    cdef double B = gx * dx + gy * dy
    cdef double t
    if B > 0.0:
        t = -A / B
        if t < hi[0]:
            hi[0] = t
    elif B < 0.0:
        t = -A / B
        if t > lo[0]:
            lo[0] = t
    else:
        if A > _DEAD:
            hi[0] = -INFINITY


cdef inline void _apply_axis(double pos, double vel, double lo_b, double hi_b,
                             double* lo, double* hi) nogil:
    cdef double t1, t2
    if vel != 0.0:
        t1 = (lo_b - pos) / vel
        t2 = (hi_b - pos) / vel
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > lo[0]:
            lo[0] = t1
        if t2 < hi[0]:
            hi[0] = t2
    else:
        if pos < lo_b or pos > hi_b:
            hi[0] = -INFINITY


def edge_rect_lengths(const double[:, ::1] sites, const int[::1] indptr, const int[::1] indices,
                      const long long[:, ::1] edges, double a, double b,
                      double c, double d):
    cdef Py_ssize_t ne = edges.shape[0]
    out_arr = np.empty(ne, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e
    cdef long long i, j
    cdef int p, l
    cdef double mx, my, dx, dy, gx, gy, cc, lo, hi, speed
    with nogil:
        for e in range(ne):
            i = edges[e, 0]
            j = edges[e, 1]
            mx = 0.5 * (sites[i, 0] + sites[j, 0])
            my = 0.5 * (sites[i, 1] + sites[j, 1])
            dx = -(sites[j, 1] - sites[i, 1])
            dy = sites[j, 0] - sites[i, 0]
            speed = sqrt(dx * dx + dy * dy)
            lo = -INFINITY
            hi = INFINITY
            _apply_axis(mx, dx, a, b, &lo, &hi)
            _apply_axis(my, dy, c, d, &lo, &hi)
            for p in range(indptr[i], indptr[i + 1]):
                l = indices[p]
                gx = 2.0 * (sites[l, 0] - sites[i, 0])
                gy = 2.0 * (sites[l, 1] - sites[i, 1])
                cc = (sites[l, 0] * sites[l, 0] + sites[l, 1] * sites[l, 1]
                      - sites[i, 0] * sites[i, 0] - sites[i, 1] * sites[i, 1])
                _apply_halfplane(mx, my, dx, dy, gx, gy, cc, &lo, &hi)
            for p in range(indptr[j], indptr[j + 1]):
                l = indices[p]
                gx = 2.0 * (sites[l, 0] - sites[i, 0])
                gy = 2.0 * (sites[l, 1] - sites[i, 1])
                cc = (sites[l, 0] * sites[l, 0] + sites[l, 1] * sites[l, 1]
                      - sites[i, 0] * sites[i, 0] - sites[i, 1] * sites[i, 1])
                _apply_halfplane(mx, my, dx, dy, gx, gy, cc, &lo, &hi)
            if hi > lo:
                out[e] = (hi - lo) * speed
            else:
                out[e] = 0.0
    return out_arr


def segment_cell_lengths(const double[:, ::1] sites, const int[::1] indptr, const int[::1] indices,
                         double x0, double y0, double x1, double y1):
    cdef Py_ssize_t n = sites.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int p, l
    cdef double dx = x1 - x0
    cdef double dy = y1 - y0
    cdef double speed = sqrt(dx * dx + dy * dy)
    cdef double gx, gy, cc, lo, hi
    with nogil:
        for i in range(n):
            lo = 0.0
            hi = 1.0
            for p in range(indptr[i], indptr[i + 1]):
                l = indices[p]
                gx = 2.0 * (sites[l, 0] - sites[i, 0])
                gy = 2.0 * (sites[l, 1] - sites[i, 1])
                cc = (sites[l, 0] * sites[l, 0] + sites[l, 1] * sites[l, 1]
                      - sites[i, 0] * sites[i, 0] - sites[i, 1] * sites[i, 1])
                _apply_halfplane(x0, y0, dx, dy, gx, gy, cc, &lo, &hi)
            if hi > lo:
                out[i] = (hi - lo) * speed
            else:
                out[i] = 0.0
    return out_arr


# ---------------------------------------------------------------------------
# cell polygons via half-plane clipping of the unit square

def clip_cells(const double[:, ::1] sites, const int[::1] indptr, const int[::1] indices):
    cdef Py_ssize_t n = sites.shape[0]
    cdef int maxdeg = 0
    cdef Py_ssize_t i
    for i in range(n):
        if indptr[i + 1] - indptr[i] > maxdeg:
            maxdeg = indptr[i + 1] - indptr[i]
    cdef int m = 5 + maxdeg
    verts_arr = np.empty((n * m, 2), dtype=np.float64)
    offsets_arr = np.zeros(n + 1, dtype=np.int32)
    cdef double[:, ::1] verts = verts_arr
    cdef int[::1] offsets = offsets_arr

    cdef double* wx = <double*>malloc((m + 1) * sizeof(double))
    cdef double* wy = <double*>malloc((m + 1) * sizeof(double))
    cdef double* ox = <double*>malloc((m + 1) * sizeof(double))
    cdef double* oy = <double*>malloc((m + 1) * sizeof(double))
    cdef double* sv = <double*>malloc((m + 1) * sizeof(double))
    if wx == NULL or wy == NULL or ox == NULL or oy == NULL or sv == NULL:
        free(wx); free(wy); free(ox); free(oy); free(sv)
        raise MemoryError

    cdef int cnt, newcnt, p, l, j, jn, total
    cdef double gx, gy, cc, t
    total = 0
    with nogil:
        for i in range(n):
            wx[0] = 0.0; wy[0] = 0.0
            wx[1] = 1.0; wy[1] = 0.0
            wx[2] = 1.0; wy[2] = 1.0
            wx[3] = 0.0; wy[3] = 1.0
            cnt = 4
            for p in range(indptr[i], indptr[i + 1]):
                l = indices[p]
                gx = 2.0 * (sites[l, 0] - sites[i, 0])
                gy = 2.0 * (sites[l, 1] - sites[i, 1])
                cc = (sites[l, 0] * sites[l, 0] + sites[l, 1] * sites[l, 1]
                      - sites[i, 0] * sites[i, 0] - sites[i, 1] * sites[i, 1])
                for j in range(cnt):
                    sv[j] = gx * wx[j] + gy * wy[j] - cc
                newcnt = 0
                for j in range(cnt):
                    jn = j + 1
                    if jn == cnt:
                        jn = 0
                    if sv[j] <= 0.0:
                        ox[newcnt] = wx[j]
                        oy[newcnt] = wy[j]
                        newcnt += 1
                    if (sv[j] <= 0.0) != (sv[jn] <= 0.0):
                        t = sv[j] / (sv[j] - sv[jn])
                        ox[newcnt] = wx[j] + t * (wx[jn] - wx[j])
                        oy[newcnt] = wy[j] + t * (wy[jn] - wy[j])
                        newcnt += 1
                for j in range(newcnt):
                    wx[j] = ox[j]
                    wy[j] = oy[j]
                cnt = newcnt
                if cnt == 0:
                    break
            for j in range(cnt):
                verts[total + j, 0] = wx[j]
                verts[total + j, 1] = wy[j]
            total += cnt
            offsets[i + 1] = total
    free(wx); free(wy); free(ox); free(oy); free(sv)
    return verts_arr[:total].copy(), offsets_arr


# ---------------------------------------------------------------------------
# union-find components

def label_components(Py_ssize_t n, const long long[::1] u, const long long[::1] v):
    labels_arr = np.empty(n, dtype=np.int32)
    if n == 0:
        return labels_arr
    cdef int[::1] labels = labels_arr
    cdef int* parent = <int*>malloc(n * sizeof(int))
    cdef int* size = <int*>malloc(n * sizeof(int))
    if parent == NULL or size == NULL:
        free(parent); free(size)
        raise MemoryError
    cdef Py_ssize_t i, e
    cdef int ra, rb, x
    with nogil:
        for i in range(n):
            parent[i] = <int>i
            size[i] = 1
        for e in range(u.shape[0]):
            ra = <int>u[e]
            while parent[ra] != ra:
                parent[ra] = parent[parent[ra]]
                ra = parent[ra]
            rb = <int>v[e]
            while parent[rb] != rb:
                parent[rb] = parent[parent[rb]]
                rb = parent[rb]
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
        for i in range(n):
            x = <int>i
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            labels[i] = x
    free(parent); free(size)
    return labels_arr
