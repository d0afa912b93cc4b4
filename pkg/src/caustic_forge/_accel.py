"""Numba switch.

Hot kernels come in two flavours: scalar loops compiled with ``numba.njit``
and vectorized numpy equivalents.  The numba path is used when numba imports
and ``CAUSTIC_FORGE_NUMBA`` is not set to ``0``; otherwise everything runs on
the numpy path.  :func:`set_backend` switches at runtime (tests, benchmarks).
"""

import os
import warnings

try:
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False
    _numba_njit = None

_env = os.environ.get("CAUSTIC_FORGE_NUMBA", "1").strip().lower()
_use_numba = NUMBA_AVAILABLE and _env not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when numba imports, identity otherwise."""
    if not NUMBA_AVAILABLE:
        return func
    return _numba_njit(cache=True)(func)


def use_numba():
    return _use_numba


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    previous = backend()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            warnings.warn("numba is not importable; staying on the numpy path")
            return previous
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
