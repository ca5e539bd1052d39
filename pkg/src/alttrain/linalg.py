"""Dense float64 matrix facade.

Matrices are 2-D C-contiguous float64 numpy arrays.  All matrix products in
the package go through this module, which guarantees a deterministic
summation order: element (i, j) of a product is accumulated over the
contraction index in increasing order, one rounding per operation.  The
actual kernels live in :mod:`alttrain.backends`.
"""

import numpy as np

from . import backends


def as_matrix(x):
    """Validate/coerce to a 2-D C-contiguous float64 array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={a.ndim}")
    return np.ascontiguousarray(a)


def matmul(a, b):
    """A @ B with deterministic, k-increasing accumulation."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return backends.matmul(a, b)


def matmul_tn(a, b):
    """A.T @ B without materializing the transpose."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape}.T x {b.shape}")
    return backends.matmul_tn(a, b)


def matmul_nt(a, b):
    """A @ B.T; the transpose is materialized, then matmul applies."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}.T")
    return backends.matmul(a, np.ascontiguousarray(b.T))


def uniform(rng, lo, hi, n):
    """n float64 draws uniform on [lo, hi) from the given Rng stream."""
    return rng.uniform(lo, hi, n)
