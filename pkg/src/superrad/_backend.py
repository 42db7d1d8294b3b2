"""Kernel backend selection.

The compiled extension is used when importable; setting the environment
variable ``SUPERRAD_BACKEND=python`` forces the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _fallback

_kernels = None
if os.environ.get("SUPERRAD_BACKEND", "").lower() != "python":
    try:
        from . import _kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _kernels = None

kernels = _kernels if _kernels is not None else _fallback
BACKEND = "compiled" if _kernels is not None else "python"


def get(name: str = "auto"):
    """Return the kernel module for ``name`` in {auto, compiled, python}."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _kernels is None:
            raise ImportError("compiled kernels are not built")
        return _kernels
    if name != "auto":
        raise ValueError(f"unknown backend '{name}'")
    return kernels
