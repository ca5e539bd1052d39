"""Kernel backend selection.

Two interchangeable implementations of the dense product kernels exist:

* ``compiled``: the Cython extension ``alttrain._kernels`` (preferred);
* ``python``: a pure-numpy fallback that accumulates with an explicit loop
  over the contraction index.

Both accumulate each output element in increasing contraction-index order,
so for identical inputs they return bit-identical results.  Selection
happens at import time; set ``ALTTRAIN_BACKEND=python`` or
``ALTTRAIN_BACKEND=compiled`` to force one.
"""

import os

import numpy as np


def _matmul_python(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for k in range(a.shape[1]):
        out += a[:, k : k + 1] * b[k]
    return out


def _matmul_tn_python(a, b):
    out = np.zeros((a.shape[1], b.shape[1]), dtype=np.float64)
    for k in range(a.shape[0]):
        out += a[k][:, None] * b[k]
    return out


_IMPLS = {"python": (_matmul_python, _matmul_tn_python)}

try:
    from . import _kernels

    _IMPLS["compiled"] = (_kernels.matmul, _kernels.matmul_tn)
except ImportError:
    _kernels = None

_requested = os.environ.get("ALTTRAIN_BACKEND", "")
if _requested:
    if _requested not in ("compiled", "python"):
        raise RuntimeError(f"unknown ALTTRAIN_BACKEND {_requested!r}")
    if _requested not in _IMPLS:
        raise RuntimeError("ALTTRAIN_BACKEND=compiled but the extension is not built")
    _selected = _requested
else:
    _selected = "compiled" if "compiled" in _IMPLS else "python"

matmul, matmul_tn = _IMPLS[_selected]


def backend_name():
    """Name of the active backend: 'compiled' or 'python'."""
    return _selected


def available_backends():
    return tuple(sorted(_IMPLS))


def get_impl(name):
    """(matmul, matmul_tn) pair for an explicitly named backend."""
    return _IMPLS[name]
