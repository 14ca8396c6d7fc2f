"""Backend switch for the compiled kernels.

Set ``COL_LAB_NUMBA=0`` before import to force the pure-numpy path.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional speedup
    numba = None

_OFF_VALUES = {"0", "false", "no", "off"}

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and (
    os.environ.get("COL_LAB_NUMBA", "1").strip().lower() not in _OFF_VALUES
)


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
