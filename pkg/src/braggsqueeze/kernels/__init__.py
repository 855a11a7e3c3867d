"""Site-local integrator kernels with a numba path and a pure-numpy path.

The backend is chosen once at import from ``BRAGGSQUEEZE_BACKEND``
(``numba`` or ``numpy``); numba is the default when it imports cleanly.
Both paths evaluate the same expressions in the same order.
"""
import os

from . import _numpy

BACKENDS = {"numpy": _numpy}

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
else:
    BACKENDS["numba"] = _numba


def _select():
    name = os.environ.get("BRAGGSQUEEZE_BACKEND", "numba" if _numba is not None else "numpy")
    name = name.strip().lower()
    if name not in BACKENDS:
        raise RuntimeError(f"BRAGGSQUEEZE_BACKEND={name!r} unavailable; choose from {sorted(BACKENDS)}")
    return name


BACKEND = _select()


def get(name=None):
    """Kernel module for ``name`` (default: the process-wide backend)."""
    return BACKENDS[name or BACKEND]
