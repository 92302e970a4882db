"""Backend selection for the numeric kernels.

The numba path is the default. Set ``BANDSURE_BACKEND=numpy`` to force the
pure-numpy fallback (also used automatically when numba cannot be imported).
"""

from __future__ import annotations

import functools
import os

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    nb = None
    HAS_NUMBA = False

BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    name = os.environ.get("BANDSURE_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"BANDSURE_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Switch the active kernel backend; returns the previous one."""
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous


if HAS_NUMBA:
    njit = functools.partial(nb.njit, cache=True, nogil=True)
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
