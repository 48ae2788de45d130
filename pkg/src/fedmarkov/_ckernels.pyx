# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in _kernels_py.

Must stay bit-compatible with the numpy fallback: same multiplication order,
strict > comparisons, lowest-index tie-breaking.
"""

import numpy as np

cimport numpy as cnp


def count_pairs(bins, int n, int lag):
    cdef const cnp.int64_t[:, :, :] b = np.ascontiguousarray(bins, dtype=np.int64)
    cdef Py_ssize_t r = b.shape[0], f = b.shape[1], w = b.shape[2]
    out_arr = np.zeros((f, n, n), dtype=np.int64)
    cdef cnp.int64_t[:, :, :] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef cnp.int64_t src, dst
    for i in range(r):
        for j in range(f):
            for t in range(w - lag):
                src = b[i, j, t]
                dst = b[i, j, t + lag]
                if src >= 0 and dst >= 0:
                    out[j, src, dst] += 1
    return out_arr


def gap_path(T, int left, int right, int length):
    cdef const double[:, :] m = np.ascontiguousarray(T, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    path_arr = np.empty(length, dtype=np.int64)
    cdef cnp.int64_t[:] path = path_arr
    cdef double[:] dp = np.empty(n, dtype=np.float64)
    cdef double[:] tmp = np.empty(n, dtype=np.float64)
    back_arr = np.empty((length, n), dtype=np.int64)
    cdef cnp.int64_t[:, :] back = back_arr
    cdef Py_ssize_t i, j, k
    cdef double best, cand
    cdef Py_ssize_t arg

    if left >= 0:
        for j in range(n):
            dp[j] = m[left, j]
        for k in range(1, length):
            for j in range(n):
                best = dp[0] * m[0, j]
                arg = 0
                for i in range(1, n):
                    cand = dp[i] * m[i, j]
                    if cand > best:
                        best = cand
                        arg = i
                tmp[j] = best
                back[k, j] = arg
            dp[:] = tmp
        if right >= 0:
            best = dp[0] * m[0, right]
            arg = 0
            for j in range(1, n):
                cand = dp[j] * m[j, right]
                if cand > best:
                    best = cand
                    arg = j
        else:
            best = dp[0]
            arg = 0
            for j in range(1, n):
                if dp[j] > best:
                    best = dp[j]
                    arg = j
        path[length - 1] = arg
        for k in range(length - 1, 0, -1):
            path[k - 1] = back[k, path[k]]
    else:
        for j in range(n):
            dp[j] = m[j, right]
        for k in range(length - 2, -1, -1):
            for j in range(n):
                best = m[j, 0] * dp[0]
                arg = 0
                for i in range(1, n):
                    cand = m[j, i] * dp[i]
                    if cand > best:
                        best = cand
                        arg = i
                tmp[j] = best
                back[k, j] = arg
            dp[:] = tmp
        best = dp[0]
        arg = 0
        for j in range(1, n):
            if dp[j] > best:
                best = dp[j]
                arg = j
        path[0] = arg
        for k in range(length - 1):
            path[k + 1] = back[k, path[k]]
    return path_arr
