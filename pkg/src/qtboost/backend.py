"""Kernel backend selection.

Batched state evolution is implemented twice: once as plain numpy array
code (`_kernels_numpy`) and once as numba ``@njit`` loops
(`_kernels_numba`).  Both expose the same function set; the numba path is
roughly an order of magnitude faster on the batched workloads used during
training.

The active backend is chosen by the environment variable
``QTBOOST_BACKEND``:

* ``auto`` (default) — numba if importable, else numpy;
* ``numba`` — force numba, raise if unavailable;
* ``numpy`` — force the pure-numpy fallback.
"""

from __future__ import annotations

import os

_ENV_VAR = "QTBOOST_BACKEND"
_cache: dict[str, object] = {}


def backend_name() -> str:
    """Resolve the backend that would be used right now ('numba' or 'numpy')."""
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be one of auto|numba|numpy, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        return "numba"
    # auto
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        return "numpy"


def kernels():
    """Return the active kernel module (cached per backend name)."""
    name = backend_name()
    mod = _cache.get(name)
    if mod is None:
        if name == "numba":
            from . import _kernels_numba as mod
        else:
            from . import _kernels_numpy as mod
        _cache[name] = mod
    return mod


def _reset_cache() -> None:
    # test hook: forget the resolved backend (env may have changed)
    _cache.clear()
