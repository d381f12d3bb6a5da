# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-form kernel surface scans (Gram fill, sup-error scan).

Kernel kinds: 0 = Wiener, 1 = Brownian bridge, 2 = Ornstein-Uhlenbeck
(a = eta, b = sigma), 3 = fractional Brownian (a = Hurst index).
"""

from libc.math cimport exp, fabs, pow

import numpy as np


cdef inline double kval(int kind, double a, double b, double s, double t) noexcept nogil:
    cdef double lo, hi
    if kind == 0:
        return s if s < t else t
    elif kind == 1:
        if s < t:
            lo = s; hi = t
        else:
            lo = t; hi = s
        return lo * (1.0 - hi)
    elif kind == 2:
        return b * b / (2.0 * a) * (exp(-a * fabs(s - t)) - exp(-a * (s + t)))
    else:
        return pow(fabs(s), 2.0 * a) + pow(fabs(t), 2.0 * a) - pow(fabs(t - s), 2.0 * a)


def gram_closed(int kind, double a, double b, double[::1] nodes):
    """Symmetric matrix K(nodes_i, nodes_j)."""
    cdef Py_ssize_t n = nodes.shape[0]
    out = np.empty((n, n))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(n):
            for j in range(i + 1):
                v = kval(kind, a, b, nodes[i], nodes[j])
                g[i, j] = v
                g[j, i] = v
    return out


def sup_error_closed(int kind, double a, double b, double[::1] edges, int refinement):
    """Max of |K(ceil(s), ceil(t)) - K(s, t)| over midpoint samples per cell.

    ceil(s) is the right endpoint of the cell containing s; refinement
    midpoint offsets per cell keep every sample strictly inside its cell.
    """
    cdef Py_ssize_t n = edges.shape[0] - 1
    cdef Py_ssize_t m = n * refinement
    pts_np = np.empty(m)
    nod_np = np.empty(m)
    cdef double[::1] pts = pts_np
    cdef double[::1] nod = nod_np
    cdef Py_ssize_t i, k, idx
    cdef double w, best = 0.0, d
    for i in range(n):
        w = edges[i + 1] - edges[i]
        for k in range(refinement):
            idx = i * refinement + k
            pts[idx] = edges[i] + (k + 0.5) * w / refinement
            nod[idx] = edges[i + 1]
    with nogil:
        for i in range(m):
            for k in range(i + 1):
                d = fabs(kval(kind, a, b, nod[i], nod[k])
                         - kval(kind, a, b, pts[i], pts[k]))
                if d > best:
                    best = d
    return best
