"""Backend selection for the compiled kernels.

Set ``PGL_LAB_BACKEND=numpy`` to force the pure-numpy code paths; the default
is ``numba`` whenever numba imports cleanly.
"""

import os
import warnings

_requested = os.environ.get("PGL_LAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    warnings.warn(f"unknown PGL_LAB_BACKEND={_requested!r}, using numpy")
    _requested = "numpy"

HAVE_NUMBA = False
if _requested == "numba":
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba not importable, falling back to numpy kernels")

BACKEND = "numba" if HAVE_NUMBA else "numpy"

if not HAVE_NUMBA:

    def njit(*args, **kwargs):
        """No-op stand-in for ``numba.njit``."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap
