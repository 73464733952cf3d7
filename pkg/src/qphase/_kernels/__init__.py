"""Backend selection for the sampler kernels.

The jitted backend is used when numba imports and ``QPHASE_NUMBA`` is unset
or truthy; ``QPHASE_NUMBA=0`` forces the pure-numpy path.  The environment is
read on every call so tests can flip it at runtime.
"""
import os

from . import numpy_impl

try:
    from . import numba_impl
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None
    HAVE_NUMBA = False

_FALSY = {"0", "false", "no", "off"}


def active_backend():
    """``"numba"`` or ``"numpy"``."""
    if not HAVE_NUMBA:
        return "numpy"
    flag = os.environ.get("QPHASE_NUMBA", "1").strip().lower()
    return "numpy" if flag in _FALSY else "numba"


def get(backend=None):
    """Module implementing the kernels for ``backend`` (default: active)."""
    backend = backend or active_backend()
    if backend == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return numba_impl
    if backend == "numpy":
        return numpy_impl
    raise ValueError(f"unknown backend {backend!r}")
