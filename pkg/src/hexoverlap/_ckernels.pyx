# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot loops.  Same signatures and outputs as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, floor, M_PI
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector
from libc.stdint cimport int64_t

cnp.import_array()


cdef inline bint _norm4_le(int64_t c0, int64_t c1, int64_t c2, int64_t c3, int64_t bound) nogil:
    # 4|x|^2 = A + B sqrt3 <= bound, exactly
    cdef int64_t p = 2 * c0 + c2
    cdef int64_t q = c1 + 2 * c3
    cdef int64_t A = p * p + 3 * c1 * c1 + q * q + 3 * c2 * c2
    cdef int64_t B = 2 * (p * c1 + q * c2)
    cdef int64_t s = bound - A
    if B <= 0:
        return s >= 0 or 3 * B * B >= s * s
    return s >= 0 and 3 * B * B <= s * s


def scan_overlaps(
    const int64_t[:, ::1] pos,
    const int64_t[::1] types,
    const double[:, ::1] xy,
    const int64_t[::1] anchors,
    const int64_t[:, ::1] xi,
    const double[:, ::1] xi_xy,
    int64_t reach_bound,
    double cell,
    int64_t ntypes,
    int64_t coef_bound,
):
    """Packed unique (i, j, delta), delta = p_a - y - p_b with 4|delta|^2 <= reach_bound.

    Returns (keys, overflow); overflow means some delta had a coefficient
    beyond coef_bound and was dropped, so the caller must retry wider.
    """
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t na = anchors.shape[0]
    cdef Py_ssize_t m = xi.shape[0]
    cdef double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300
    cdef Py_ssize_t k
    for k in range(n):
        if xy[k, 0] < xmin: xmin = xy[k, 0]
        if xy[k, 0] > xmax: xmax = xy[k, 0]
        if xy[k, 1] < ymin: ymin = xy[k, 1]
        if xy[k, 1] > ymax: ymax = xy[k, 1]
    cdef int64_t nx = <int64_t>floor((xmax - xmin) / cell) + 1
    cdef int64_t ny = <int64_t>floor((ymax - ymin) / cell) + 1
    # CSR bucket grid
    cdef vector[int64_t] start = vector[int64_t](nx * ny + 1, 0)
    cdef vector[int64_t] items = vector[int64_t](n, 0)
    cdef vector[int64_t] cellof = vector[int64_t](n, 0)
    cdef int64_t cx, cy, c
    for k in range(n):
        cx = <int64_t>floor((xy[k, 0] - xmin) / cell)
        cy = <int64_t>floor((xy[k, 1] - ymin) / cell)
        c = cx * ny + cy
        cellof[k] = c
        start[c + 1] += 1
    for k in range(nx * ny):
        start[k + 1] += start[k]
    cdef vector[int64_t] fill = start
    for k in range(n):
        c = cellof[k]
        items[fill[c]] = k
        fill[c] += 1

    cdef int64_t B = 2 * coef_bound + 1
    cdef unordered_set[int64_t] seen
    cdef bint overflow = False
    cdef Py_ssize_t ai, yi, t
    cdef int64_t a, b, tx, ty, dx, dy, gx, gy, key
    cdef int64_t d0, d1, d2, d3
    cdef double px, py
    with nogil:
        for ai in range(na):
            a = anchors[ai]
            for yi in range(m):
                px = xy[a, 0] - xi_xy[yi, 0]
                py = xy[a, 1] - xi_xy[yi, 1]
                tx = <int64_t>floor((px - xmin) / cell)
                ty = <int64_t>floor((py - ymin) / cell)
                for dx in range(-1, 2):
                    gx = tx + dx
                    if gx < 0 or gx >= nx:
                        continue
                    for dy in range(-1, 2):
                        gy = ty + dy
                        if gy < 0 or gy >= ny:
                            continue
                        c = gx * ny + gy
                        for t in range(start[c], start[c + 1]):
                            b = items[t]
                            d0 = pos[a, 0] - xi[yi, 0] - pos[b, 0]
                            d1 = pos[a, 1] - xi[yi, 1] - pos[b, 1]
                            d2 = pos[a, 2] - xi[yi, 2] - pos[b, 2]
                            d3 = pos[a, 3] - xi[yi, 3] - pos[b, 3]
                            if not _norm4_le(d0, d1, d2, d3, reach_bound):
                                continue
                            if (d0 > coef_bound or d0 < -coef_bound or d1 > coef_bound or d1 < -coef_bound
                                    or d2 > coef_bound or d2 < -coef_bound or d3 > coef_bound or d3 < -coef_bound):
                                overflow = True
                                continue
                            key = types[a] * ntypes + types[b]
                            key = key * B + (d0 + coef_bound)
                            key = key * B + (d1 + coef_bound)
                            key = key * B + (d2 + coef_bound)
                            key = key * B + (d3 + coef_bound)
                            seen.insert(key)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] keys = np.empty(seen.size(), dtype=np.int64)
    k = 0
    for key in seen:
        keys[k] = key
        k += 1
    return keys, bool(overflow)


def inflate_classes(
    const int64_t[:, ::1] cls,
    const int64_t[:, ::1] qmat,
    const int64_t[:, ::1] child_type,
    const int64_t[:, :, ::1] child_off,
    int64_t reach_bound,
):
    """Rows (parent, i', j', delta') over all child pairs passing the radius test."""
    cdef Py_ssize_t n = cls.shape[0]
    cdef Py_ssize_t cmax = child_type.shape[1]
    cdef vector[int64_t] out
    cdef Py_ssize_t r, a, b, s
    cdef int64_t i, j, ci, cj
    cdef int64_t q[4]
    cdef int64_t d[4]
    with nogil:
        for r in range(n):
            i = cls[r, 0]
            j = cls[r, 1]
            for s in range(4):
                q[s] = (qmat[s, 0] * cls[r, 2] + qmat[s, 1] * cls[r, 3]
                        + qmat[s, 2] * cls[r, 4] + qmat[s, 3] * cls[r, 5])
            for a in range(cmax):
                ci = child_type[i, a]
                if ci < 0:
                    continue
                for b in range(cmax):
                    cj = child_type[j, b]
                    if cj < 0:
                        continue
                    for s in range(4):
                        d[s] = q[s] + child_off[i, a, s] - child_off[j, b, s]
                    if not _norm4_le(d[0], d[1], d[2], d[3], reach_bound):
                        continue
                    out.push_back(r)
                    out.push_back(ci)
                    out.push_back(cj)
                    out.push_back(d[0])
                    out.push_back(d[1])
                    out.push_back(d[2])
                    out.push_back(d[3])
    cdef Py_ssize_t total = out.size() // 7
    cdef cnp.ndarray[cnp.int64_t, ndim=2] res = np.empty((total, 7), dtype=np.int64)
    for r in range(total):
        for s in range(7):
            res[r, s] = out[7 * r + s]
    return res


def intensity(
    const double[:, ::1] xy,
    const double[::1] wre,
    const double[::1] wim,
    const double[:, ::1] kgrid,
):
    """|sum_x w(x) exp(-2 pi i k.x)|^2 for every k in the grid (not normalized)."""
    cdef Py_ssize_t n = xy.shape[0]
    cdef Py_ssize_t g = kgrid.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] res = np.empty(g, dtype=np.float64)
    cdef double[::1] rv = res
    cdef Py_ssize_t a, b
    cdef double kx, ky, ph, c, s, sr, si
    with nogil:
        for a in range(g):
            kx = -2.0 * M_PI * kgrid[a, 0]
            ky = -2.0 * M_PI * kgrid[a, 1]
            sr = 0.0
            si = 0.0
            for b in range(n):
                ph = kx * xy[b, 0] + ky * xy[b, 1]
                c = cos(ph)
                s = sin(ph)
                sr = sr + wre[b] * c - wim[b] * s
                si = si + wre[b] * s + wim[b] * c
            rv[a] = sr * sr + si * si
    return res
