"""Kernel compilation switch.

Hot loops in :mod:`penbench._kernels` are written in nopython style and
compiled with numba by default. Setting the environment variable
``PENBENCH_NO_NUMBA=1`` (before import) selects the interpreted
numpy-and-Python fallback instead: the exact same functions run uncompiled
and produce bitwise-identical results, only slower. ``penbench bench``
measures the gap.
"""

from __future__ import annotations

import functools
import os

_flag = os.environ.get("PENBENCH_NO_NUMBA", "").strip().lower()
NUMBA_ENABLED = _flag not in {"1", "true", "yes", "on"}

if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but degrade
        NUMBA_ENABLED = False

if NUMBA_ENABLED:

    def jit(fn):
        return _njit(cache=True, nogil=True)(fn)

else:
    import numpy as _np

    def jit(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            # numpy warns on wrapping uint64 arithmetic; the wrap is intended
            with _np.errstate(over="ignore"):
                return fn(*args, **kwargs)

        return wrapper
