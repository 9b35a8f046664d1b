"""Backend selection for the hot kernels.

Every kernel in :mod:`llgbubble.kernels` exists twice: a loop version
compiled with ``numba.njit`` and a vectorised numpy version.  The numba
path is used when numba imports and ``LLGBUBBLE_DISABLE_NUMBA`` is unset.
"""

import os

_flag = os.environ.get("LLGBUBBLE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(func):
    """Compile ``func`` with numba if it is importable, else return it unchanged."""
    if numba is None:
        return func
    return numba.njit(cache=True, fastmath=False)(func)


def select(numba_impl, numpy_impl, use_numba=None):
    if use_numba is None:
        use_numba = USE_NUMBA
    return numba_impl if use_numba else numpy_impl
