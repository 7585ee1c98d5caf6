"""Hot kernels behind a backend switch.

The numba path is used when numba imports and ``RFPINN_DISABLE_NUMBA`` is
unset; otherwise the numpy path.  Both modules stay importable so tests and
the benchmark can compare them directly.
"""

from .._accel import USE_NUMBA, backend_name
from . import _numpy as numpy_backend

if USE_NUMBA:
    from . import _numba as numba_backend

    _active = numba_backend
else:
    numba_backend = None
    _active = numpy_backend

sigma = _active.sigma
feature_matrix = _active.feature_matrix
interior_matrix = _active.interior_matrix
model_derivs = _active.model_derivs

__all__ = [
    "backend_name",
    "feature_matrix",
    "interior_matrix",
    "model_derivs",
    "numba_backend",
    "numpy_backend",
    "sigma",
]
