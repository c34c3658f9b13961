"""Kernel backend selection.

The compiled extension is used when it imports and ``EDLAB_PURE_PYTHON`` is
unset; otherwise the numpy fallback is used.
"""
from __future__ import annotations

import os

from . import _fallback

hash_uniform = _fallback.hash_uniform

_compiled = None
if not os.environ.get("EDLAB_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback


def orbit_count(x1, x2, a1, a2, N, ra, rb) -> int:
    return int(_impl.orbit_count(float(x1), float(x2), float(a1), float(a2), int(N),
                                 float(ra), float(rb)))


def lattice_pair_sum(c1, xz1, c2, xz2, theta, seed, pcheck_max, ea, eb, b_shift=0.0):
    import numpy as np

    args = (np.ascontiguousarray(c1, dtype=np.int64), np.ascontiguousarray(xz1, dtype=np.float64),
            np.ascontiguousarray(c2, dtype=np.int64), np.ascontiguousarray(xz2, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64))
    if args[0].shape[0] == 0 or args[2].shape[0] == 0:
        return 0.0, 0
    value, count = _impl.lattice_pair_sum(*args, int(seed) % 2**64, int(pcheck_max),
                                          float(ea), float(eb), float(b_shift))
    return float(value), int(count)
