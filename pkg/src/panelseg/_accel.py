"""Backend selection for the numerical kernels.

``PANELSEG_BACKEND=numpy`` forces the vectorised numpy path; anything else
(default ``numba``) uses the jitted loops when numba is importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
BACKEND = "numba" if HAVE_NUMBA and os.environ.get("PANELSEG_BACKEND", "numba").lower() != "numpy" else "numpy"


def njit(fn):
    """``numba.njit(cache=True, nogil=True)`` or the identity without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
