"""Compiled dense float64 kernels with a pinned accumulation order.

Every output element is a sum of products accumulated in increasing order
of the contraction index, one rounding per multiply and per add.  Together
with the -ffp-contract=off build flag this makes the results bit-identical
to a naive triple loop and to the pure-numpy fallback backend.
"""

import numpy as np


def matmul(const double[:, ::1] a, const double[:, ::1] b):
    """C = A @ B with C[i, j] accumulated over k = 0, 1, ..., in order."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kdim = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, k, j
    cdef double aik
    for i in range(m):
        for k in range(kdim):
            aik = a[i, k]
            for j in range(n):
                c[i, j] = c[i, j] + aik * b[k, j]
    return out


def matmul_tn(const double[:, ::1] a, const double[:, ::1] b):
    """C = A.T @ B with the same per-element accumulation order as matmul."""
    cdef Py_ssize_t kdim = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, k, j
    cdef double aki
    for k in range(kdim):
        for i in range(m):
            aki = a[k, i]
            for j in range(n):
                c[i, j] = c[i, j] + aki * b[k, j]
    return out
