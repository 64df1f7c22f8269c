# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampler kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY

cnp.import_array()


def sample_rows(const double[:, ::1] logw, const double[::1] u):
    cdef Py_ssize_t n = logw.shape[0], g = logw.shape[1], i, c
    cdef double mx, total, target
    out = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef double[::1] cum = np.empty(g if g > 0 else 1)
    if g == 1:
        return out
    for i in range(n):
        mx = -INFINITY
        for c in range(g):
            if logw[i, c] > mx:
                mx = logw[i, c]
        total = 0.0
        for c in range(g):
            total += exp(logw[i, c] - mx)
            cum[c] = total
        target = u[i] * total
        c = 0
        while c < g - 1 and cum[c] <= target:
            c += 1
        o[i] = c
    return out


def sample_lambda(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, const double[::1] logq,
                  const double[::1] r, const double[::1] eta_star, double inv_two_sigma2, const double[::1] u):
    cdef Py_ssize_t p = indptr.shape[0] - 1, i, a, b, s, n
    cdef double mx, total, target, d
    out = np.empty(p, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef Py_ssize_t maxlen = 1
    for i in range(p):
        if indptr[i + 1] - indptr[i] > maxlen:
            maxlen = indptr[i + 1] - indptr[i]
    cdef double[::1] lw = np.empty(maxlen)
    cdef double[::1] cum = np.empty(maxlen)
    for i in range(p):
        a = indptr[i]
        b = indptr[i + 1]
        n = b - a
        mx = -INFINITY
        for s in range(n):
            d = r[i] - eta_star[indices[a + s]]
            lw[s] = logq[a + s] - d * d * inv_two_sigma2
            if lw[s] > mx:
                mx = lw[s]
        total = 0.0
        for s in range(n):
            total += exp(lw[s] - mx)
            cum[s] = total
        target = u[i] * total
        s = 0
        while s < n - 1 and cum[s] <= target:
            s += 1
        o[i] = a + s
    return out


cdef Py_ssize_t _find(cnp.int64_t[::1] parent, Py_ssize_t x) nogil:
    cdef Py_ssize_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


def bond_labels(Py_ssize_t k, const cnp.int64_t[::1] eu, const cnp.int64_t[::1] ev, const cnp.uint8_t[::1] bonded):
    cdef Py_ssize_t e, a, b, j, n = 0
    parent_arr = np.arange(k, dtype=np.int64)
    cdef cnp.int64_t[::1] parent = parent_arr
    labels = np.empty(k, dtype=np.int64)
    cdef cnp.int64_t[::1] lab = labels
    cdef cnp.int64_t[::1] root_label = np.full(k, -1, dtype=np.int64)
    for e in range(eu.shape[0]):
        if bonded[e]:
            a = _find(parent, eu[e])
            b = _find(parent, ev[e])
            if a != b:
                if a < b:
                    parent[b] = a
                else:
                    parent[a] = b
    for j in range(k):
        a = _find(parent, j)
        if root_label[a] < 0:
            root_label[a] = n
            n += 1
        lab[j] = root_label[a]
    return labels, n
