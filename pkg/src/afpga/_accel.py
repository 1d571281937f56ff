"""numba switch.

Kernels are written once as plain Python over numpy arrays.  When numba is
importable and ``AFPGA_DISABLE_NUMBA`` is unset (or ``0``) they are compiled
with ``numba.njit``; otherwise the same source runs interpreted.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLED = os.environ.get("AFPGA_DISABLE_NUMBA", "").strip() not in ("", "0")
USE_NUMBA = numba is not None and not DISABLED


def njit(fn):
    """Compile ``fn`` when numba is active; keep the Python original on ``.py_func``."""
    if not USE_NUMBA:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True)(fn)
