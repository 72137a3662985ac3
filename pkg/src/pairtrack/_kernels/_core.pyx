# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations.

Hot loops of the pipeline: pairwise overlap matrices and greedy paired NMS,
both O(N*M) / O(N^2) at proposal counts in the thousands. Must match
_numpy.py semantics exactly.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _iou_one(const double* a, const double* b) noexcept nogil:
    # a, b point at (cx, cy, w, h)
    cdef double ax1 = a[0] - a[2] / 2, ay1 = a[1] - a[3] / 2
    cdef double ax2 = a[0] + a[2] / 2, ay2 = a[1] + a[3] / 2
    cdef double bx1 = b[0] - b[2] / 2, by1 = b[1] - b[3] / 2
    cdef double bx2 = b[0] + b[2] / 2, by2 = b[1] + b[3] / 2
    cdef double iw = min(ax2, bx2) - max(ax1, bx1)
    cdef double ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    cdef double inter = iw * ih
    # corner-difference areas, matching _numpy.py bit for bit
    return inter / ((ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter)


cdef inline void _iuh_one(const double* a, const double* b,
                          double* inter, double* union_, double* hull) noexcept nogil:
    cdef double ax1 = a[0] - a[2] / 2, ay1 = a[1] - a[3] / 2
    cdef double ax2 = a[0] + a[2] / 2, ay2 = a[1] + a[3] / 2
    cdef double bx1 = b[0] - b[2] / 2, by1 = b[1] - b[3] / 2
    cdef double bx2 = b[0] + b[2] / 2, by2 = b[1] + b[3] / 2
    cdef double iw = min(ax2, bx2) - max(ax1, bx1)
    cdef double ih = min(ay2, by2) - max(ay1, by1)
    cdef double it = 0.0
    if iw > 0 and ih > 0:
        it = iw * ih
    inter[0] = it
    union_[0] = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - it
    hull[0] = (max(ax2, bx2) - min(ax1, bx1)) * (max(ay2, by2) - min(ay1, by1))


cdef inline double _iou3d_one(const double* a, const double* b) noexcept nogil:
    cdef double i1, u1, h1, i2, u2, h2
    _iuh_one(a, b, &i1, &u1, &h1)
    _iuh_one(a + 4, b + 4, &i2, &u2, &h2)
    return (i1 + i2) / (u1 + u2)


def pairwise_iou(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = _iou_one(&a[i, 0], &b[j, 0])
    return out


def pairwise_iou3d(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = _iou3d_one(&a[i, 0], &b[j, 0])
    return out


def pairwise_giou3d(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef double i1, u1, h1, i2, u2, h2, pen
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                _iuh_one(&a[i, 0], &b[j, 0], &i1, &u1, &h1)
                _iuh_one(&a[i, 4], &b[j, 4], &i2, &u2, &h2)
                pen = (h1 - u1) + (h2 - u2)
                if pen < 0:
                    pen = -pen
                o[i, j] = (i1 + i2) / (u1 + u2) - pen / abs(h1 + h2)
    return out


def nms_keep(const double[:, ::1] boxes, const double[::1] scores, double n_th):
    """Greedy paired NMS; returns kept indices in descending-score order."""
    cdef Py_ssize_t n = boxes.shape[0], i, j, idx
    order_arr = np.argsort(-np.asarray(scores), kind="stable").astype(np.int64)
    cdef long long[::1] order = order_arr
    alive_arr = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] alive = alive_arr
    keep: list = []
    with nogil:
        for i in range(n):
            idx = order[i]
            if not alive[idx]:
                continue
            with gil:
                keep.append(idx)
            for j in range(i + 1, n):
                if alive[order[j]] and _iou3d_one(&boxes[idx, 0], &boxes[order[j], 0]) > n_th:
                    alive[order[j]] = 0
    return np.asarray(keep, dtype=np.int64)
