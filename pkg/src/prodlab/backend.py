"""Kernel backend selection: numba-compiled kernels or the pure-numpy fallback.

The default backend is "numba" when numba imports cleanly, otherwise "numpy".
Set the environment variable PRODLAB_BACKEND to "numba" or "numpy" to force a
choice; tests and benchmarks may also force one in-process via set_backend().
"""
from __future__ import annotations

import os

ENV_VAR = "PRODLAB_BACKEND"
_VALID = ("numba", "numpy")

_forced: str | None = None
_numba_ok: bool | None = None


def _numba_available() -> bool:
    global _numba_ok
    if _numba_ok is None:
        try:
            import numba  # noqa: F401
            _numba_ok = True
        except Exception:
            _numba_ok = False
    return _numba_ok


def backend_name() -> str:
    """Resolve the active backend name ("numba" or "numpy")."""
    if _forced is not None:
        return _forced
    env = os.environ.get(ENV_VAR, "").strip().lower()
    if env:
        if env not in _VALID:
            raise ValueError(f"{ENV_VAR} must be one of {_VALID}, got {env!r}")
        if env == "numba" and not _numba_available():
            raise ValueError(f"{ENV_VAR}=numba requested but numba is not importable")
        return env
    return "numba" if _numba_available() else "numpy"


def set_backend(name: str | None) -> None:
    """Force a backend in-process (None restores env/default resolution)."""
    global _forced
    if name is not None and name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    _forced = name


def kernels():
    """Return the module implementing the active backend's kernels."""
    if backend_name() == "numba":
        from . import _kernels_numba as mod
    else:
        from . import _kernels_numpy as mod
    return mod
