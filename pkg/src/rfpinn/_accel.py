"""Backend selection for the hot kernels.

Setting ``RFPINN_DISABLE_NUMBA=1`` in the environment (before import) forces
the pure-numpy kernels even when numba is installed.
"""

import os

_FLAG = os.environ.get("RFPINN_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in ("1", "true", "yes", "on")

try:
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # omp is safe for launches from several Python threads at once
        numba.config.THREADING_LAYER = "omp"

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False
    njit = None
    prange = range

USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
