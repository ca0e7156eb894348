# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled joint-table enumeration.

Walks every full feature configuration with an odometer (last feature
fastest). Prefix products are cached per feature position, so a step only
recomputes the factors at and after the digit that changed.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def joint_table(const int64_t[::1] cards,
                const int64_t[:, :, ::1] par_idx,
                const int64_t[:, ::1] par_cnt,
                const int64_t[:, ::1] offsets,
                const double[::1] values,
                const double[::1] priors):
    cdef Py_ssize_t n = cards.shape[0]
    cdef Py_ssize_t nc = priors.shape[0]
    cdef Py_ssize_t total = 1
    cdef Py_ssize_t i, j, c, k, start
    cdef int64_t row, q
    for i in range(n):
        total *= cards[i]
    out = np.empty((nc, total), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef int64_t[::1] digits = np.zeros(max(n, 1), dtype=np.int64)
    cdef double[::1] prefix = np.empty(n + 1, dtype=np.float64)

    for c in range(nc):
        for i in range(n):
            digits[i] = 0
        prefix[0] = priors[c]
        start = 0
        for k in range(total):
            for i in range(start, n):
                row = 0
                for j in range(par_cnt[c, i]):
                    q = par_idx[c, i, j]
                    row = row * cards[q] + digits[q]
                prefix[i + 1] = prefix[i] * values[offsets[c, i] + row * cards[i] + digits[i]]
            res[c, k] = prefix[n]
            i = n - 1
            while i >= 0:
                digits[i] += 1
                if digits[i] < cards[i]:
                    break
                digits[i] = 0
                i -= 1
            start = i
    return out
