"""Joint-table enumeration kernel with a compiled fast path.

The compiled extension is used when it was built and ``PCNET_PURE_PYTHON``
is unset; otherwise the NumPy implementation runs.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("PCNET_PURE_PYTHON"):
        raise ImportError("compiled kernel disabled by PCNET_PURE_PYTHON")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "numpy"


def encode(cards, slices):
    """Pack per-concept CPT slices into flat arrays for the kernels.

    ``slices[c][i]`` is ``(parent_positions, cpt)`` for feature position ``i``
    of concept ``c``; parent positions must be sorted and below ``i``.
    """
    n = len(cards)
    nc = len(slices)
    maxp = max([1] + [len(ps) for per in slices for ps, _ in per])
    par_idx = np.zeros((nc, n, maxp), dtype=np.int64)
    par_cnt = np.zeros((nc, n), dtype=np.int64)
    offsets = np.zeros((nc, n), dtype=np.int64)
    chunks, pos = [], 0
    for c, per in enumerate(slices):
        for i, (ps, cpt) in enumerate(per):
            if list(ps) != sorted(ps) or any(q >= i for q in ps):
                raise ValueError(f"parents of feature {i} must be sorted and precede it")
            par_cnt[c, i] = len(ps)
            par_idx[c, i, : len(ps)] = ps
            offsets[c, i] = pos
            flat = np.ascontiguousarray(cpt, dtype=np.float64).reshape(-1)
            chunks.append(flat)
            pos += flat.size
    values = np.concatenate(chunks) if chunks else np.zeros(0)
    return (np.asarray(cards, dtype=np.int64), par_idx, par_cnt, offsets, values)


def joint_table(cards, slices, priors, backend=None) -> np.ndarray:
    """Return ``p(c, x)`` as an array of shape ``(n_concepts, *cards)``."""
    impl = {"cython": _impl if BACKEND == "cython" else None, "numpy": _kernels_py,
            None: _impl}[backend]
    if impl is None:
        raise RuntimeError("compiled kernel is not available")
    args = encode(cards, slices)
    flat = impl.joint_table(*args, np.ascontiguousarray(priors, dtype=np.float64))
    return flat.reshape((len(priors),) + tuple(int(n) for n in cards))
