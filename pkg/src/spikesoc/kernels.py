"""Kernel backend selection.

The compiled extension is preferred when built; the numpy fallback is
always available.  Set SPIKESOC_KERNELS=python or =compiled to force one.
"""

from __future__ import annotations

import os
from types import ModuleType
from typing import Optional

from . import _kernels_py

try:
    from . import _kernels  # built by setup.py; optional
    COMPILED_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None  # type: ignore[assignment]
    COMPILED_AVAILABLE = False

BACKEND_NAMES = ("compiled", "python") if COMPILED_AVAILABLE else ("python",)


def get_backend(name: Optional[str] = None) -> ModuleType:
    if name is None:
        name = os.environ.get("SPIKESOC_KERNELS", "auto")
    if name in ("", "auto"):
        return _kernels if COMPILED_AVAILABLE else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if not COMPILED_AVAILABLE:
            raise RuntimeError("compiled kernels requested but the extension is not built")
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name(module: ModuleType) -> str:
    return "python" if module is _kernels_py else "compiled"


__all__ = ["BACKEND_NAMES", "COMPILED_AVAILABLE", "backend_name", "get_backend"]
