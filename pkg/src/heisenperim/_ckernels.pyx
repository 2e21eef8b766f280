# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: vertex-max support function and fused mesh content."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def support_max(const double[:, ::1] w, const double[:, ::1] verts):
    cdef Py_ssize_t n = w.shape[0], k = verts.shape[0], i, j
    cdef double best, d
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            best = w[i, 0] * verts[0, 0] + w[i, 1] * verts[0, 1]
            for j in range(1, k):
                d = w[i, 0] * verts[j, 0] + w[i, 1] * verts[j, 1]
                if d > best:
                    best = d
            o[i] = best
    return out


def tri_contents(const double[:, ::1] p0, const double[:, ::1] p1, const double[:, ::1] p2,
                 const double[:, ::1] bary, const double[:, ::1] verts, double radius):
    cdef Py_ssize_t n = p0.shape[0], nb = bary.shape[0], nv = verts.shape[0]
    cdef Py_ssize_t i, s, j
    cdef double ax, ay, az, bx, by, bz, nx, ny, nz, cx, cy, px, py, acc, best, d
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            ax = p1[i, 0] - p0[i, 0]; ay = p1[i, 1] - p0[i, 1]; az = p1[i, 2] - p0[i, 2]
            bx = p2[i, 0] - p0[i, 0]; by = p2[i, 1] - p0[i, 1]; bz = p2[i, 2] - p0[i, 2]
            nx = 0.5 * (ay * bz - az * by)
            ny = 0.5 * (az * bx - ax * bz)
            nz = 0.5 * (ax * by - ay * bx)
            acc = 0.0
            for s in range(nb):
                cx = bary[s, 0] * p0[i, 0] + bary[s, 1] * p1[i, 0] + bary[s, 2] * p2[i, 0]
                cy = bary[s, 0] * p0[i, 1] + bary[s, 1] * p1[i, 1] + bary[s, 2] * p2[i, 1]
                px = nx - 0.5 * cy * nz
                py = ny + 0.5 * cx * nz
                if radius > 0:
                    acc += radius * sqrt(px * px + py * py)
                else:
                    best = px * verts[0, 0] + py * verts[0, 1]
                    for j in range(1, nv):
                        d = px * verts[j, 0] + py * verts[j, 1]
                        if d > best:
                            best = d
                    acc += best
            o[i] = acc / nb
    return out
