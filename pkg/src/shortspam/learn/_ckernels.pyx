# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split search and tree traversal.

Both functions mirror ``_pykernels`` operation for operation: entropy terms
come from the shared ``xlogx`` table and are combined in the same order, so
the two backends return bit-identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport isnan, NAN
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef double TIE_EPS = 1e-12


cdef inline double _ent(const double[::1] xlogx, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    return xlogx[a + b] - xlogx[a] - xlogx[b]


cdef void _merge_sort(double* v, unsigned char* l, double* tv, unsigned char* tl,
                      Py_ssize_t n) noexcept nogil:
    # bottom-up merge sort of (value, label) pairs by value
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef double* src_v = v
    cdef unsigned char* src_l = l
    cdef double* dst_v = tv
    cdef unsigned char* dst_l = tl
    cdef double* sw_v
    cdef unsigned char* sw_l
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src_v[j] < src_v[i]:
                    dst_v[k] = src_v[j]
                    dst_l[k] = src_l[j]
                    j += 1
                else:
                    dst_v[k] = src_v[i]
                    dst_l[k] = src_l[i]
                    i += 1
                k += 1
            while i < mid:
                dst_v[k] = src_v[i]
                dst_l[k] = src_l[i]
                i += 1
                k += 1
            while j < hi:
                dst_v[k] = src_v[j]
                dst_l[k] = src_l[j]
                j += 1
                k += 1
            lo = hi
        sw_v = src_v; src_v = dst_v; dst_v = sw_v
        sw_l = src_l; src_l = dst_l; dst_l = sw_l
        width *= 2
    if src_v != v:
        memcpy(v, src_v, n * sizeof(double))
        memcpy(l, src_l, n * sizeof(unsigned char))


def best_split(const double[:, ::1] X, const unsigned char[::1] y,
               const cnp.intp_t[::1] features, const double[::1] xlogx,
               Py_ssize_t min_leaf):
    """Best (feature, threshold, gain, missing_left) over ``features``.

    Returns feature -1 when no threshold satisfies ``min_leaf``.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = features.shape[0]
    cdef Py_ssize_t ncand = k * (n - 1) if n > 1 else 0
    if ncand == 0:
        return -1, float("nan"), 0.0, False

    cdef double* v = <double*> malloc(n * sizeof(double))
    cdef double* tv = <double*> malloc(n * sizeof(double))
    cdef unsigned char* l = <unsigned char*> malloc(n)
    cdef unsigned char* tl = <unsigned char*> malloc(n)
    cdef double* c_gain = <double*> malloc(ncand * sizeof(double))
    cdef double* c_thr = <double*> malloc(ncand * sizeof(double))
    cdef Py_ssize_t* c_feat = <Py_ssize_t*> malloc(ncand * sizeof(Py_ssize_t))
    cdef unsigned char* c_ml = <unsigned char*> malloc(ncand)
    if not (v and tv and l and tl and c_gain and c_thr and c_feat and c_ml):
        free(v); free(tv); free(l); free(tl); free(c_gain); free(c_thr); free(c_feat); free(c_ml)
        raise MemoryError()

    cdef Py_ssize_t n0 = 0, n1 = 0, i, fi, f, nn, m0, m1, t0, t1
    cdef Py_ssize_t nl, nr, cl1, cl0, a0, a1, b0, b1, nc = 0, best = -1
    cdef unsigned char ml
    cdef double P, W, gain, thr, gmax
    cdef double x

    with nogil:
        for i in range(n):
            n1 += y[i]
        n0 = n - n1
        P = _ent(xlogx, n0, n1)
        for fi in range(k):
            f = features[fi]
            nn = 0
            m0 = 0
            m1 = 0
            for i in range(n):
                x = X[i, f]
                if isnan(x):
                    if y[i]:
                        m1 += 1
                    else:
                        m0 += 1
                else:
                    v[nn] = x
                    l[nn] = y[i]
                    nn += 1
            if nn < 2:
                continue
            _merge_sort(v, l, tv, tl, nn)
            t1 = 0
            for i in range(nn):
                t1 += l[i]
            t0 = nn - t1
            cl1 = 0
            for i in range(nn - 1):
                cl1 += l[i]
                if not (v[i] < v[i + 1]):
                    continue
                nl = i + 1
                nr = nn - nl
                cl0 = nl - cl1
                if nl >= nr:
                    a0 = cl0 + m0
                    a1 = cl1 + m1
                    b0 = t0 - cl0
                    b1 = t1 - cl1
                    ml = 1
                else:
                    a0 = cl0
                    a1 = cl1
                    b0 = t0 - cl0 + m0
                    b1 = t1 - cl1 + m1
                    ml = 0
                if a0 + a1 < min_leaf or b0 + b1 < min_leaf:
                    continue
                W = _ent(xlogx, a0, a1) + _ent(xlogx, b0, b1)
                gain = (P - W) / n
                thr = 0.5 * (v[i] + v[i + 1])
                if not (thr < v[i + 1]):
                    thr = v[i]
                c_gain[nc] = gain
                c_thr[nc] = thr
                c_feat[nc] = f
                c_ml[nc] = ml
                nc += 1
        if nc > 0:
            gmax = c_gain[0]
            for i in range(1, nc):
                if c_gain[i] > gmax:
                    gmax = c_gain[i]
            for i in range(nc):
                if c_gain[i] >= gmax - TIE_EPS:
                    best = i
                    break

    if best < 0:
        result = (-1, float("nan"), 0.0, False)
    else:
        result = (int(c_feat[best]), float(c_thr[best]), float(c_gain[best]), bool(c_ml[best]))
    free(v); free(tv); free(l); free(tl); free(c_gain); free(c_thr); free(c_feat); free(c_ml)
    return result


def apply_tree(const cnp.intp_t[::1] feature, const double[::1] threshold,
               const cnp.intp_t[::1] left, const cnp.intp_t[::1] right,
               const unsigned char[::1] missing_left, const double[:, ::1] X):
    """Leaf index reached by every row of ``X``."""
    cdef Py_ssize_t n = X.shape[0], i, node, f
    cdef double x
    out = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] res = out
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                f = feature[node]
                x = X[i, f]
                if isnan(x):
                    node = left[node] if missing_left[node] else right[node]
                elif x <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            res[i] = node
    return out
