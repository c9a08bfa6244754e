# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
from libc.math cimport log


def nearest_centroid(X, C):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], k = c.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, best_d
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cdef long long[::1] lab = labels
    cdef double[::1] dst = dist
    with nogil:
        for i in range(n):
            best = 0
            best_d = 0.0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - c[j, t]
                    acc = acc + diff * diff
                if j == 0 or acc < best_d:
                    best_d = acc
                    best = j
            lab[i] = best
            dst[i] = best_d
    return labels, dist


def tsne_gradient(Y, P, bint compute_kl=True):
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], d = y.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff, z = 0.0, q, w, kl = 0.0
    num_arr = np.zeros((n, n), dtype=np.float64)
    grad_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] num = num_arr
    cdef double[:, ::1] grad = grad_arr
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    diff = y[i, t] - y[j, t]
                    acc = acc + diff * diff
                num[i, j] = 1.0 / (1.0 + acc)
                num[j, i] = num[i, j]
                z = z + 2.0 * num[i, j]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                q = num[i, j] / z
                if q < 1e-300:
                    q = 1e-300
                w = (p[i, j] - q) * num[i, j]
                for t in range(d):
                    grad[i, t] = grad[i, t] + 4.0 * w * (y[i, t] - y[j, t])
                if compute_kl and p[i, j] > 0:
                    kl = kl + p[i, j] * log(p[i, j] / q)
    if not compute_kl:
        return grad_arr, float("nan")
    return grad_arr, kl


def pair_confusion(pred, truth, Py_ssize_t k):
    cdef const long long[::1] pr = np.ascontiguousarray(pred, dtype=np.int64)
    cdef const long long[::1] tr = np.ascontiguousarray(truth, dtype=np.int64)
    out = np.zeros((k, k), dtype=np.int64)
    cdef long long[:, ::1] m = out
    cdef Py_ssize_t i, n = pr.shape[0]
    with nogil:
        for i in range(n):
            m[tr[i], pr[i]] += 1
    return out
