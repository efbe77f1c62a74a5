"""Kernel backend selection.

The compiled extension is preferred; set ``SHORTSPAM_PURE_PYTHON=1`` to force
the numpy fallback. Both backends give bit-identical models.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache
from types import ModuleType

import numpy as np

from shortspam.learn import _pykernels

try:
    from shortspam.learn import _ckernels as _native
except ImportError:  # extension not built
    _native = None

NATIVE_AVAILABLE = _native is not None


def _default_name() -> str:
    if os.environ.get("SHORTSPAM_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python"
    return "native" if NATIVE_AVAILABLE else "python"


DEFAULT_BACKEND = _default_name()


def get_kernels(name: str | None = None) -> ModuleType:
    name = name or DEFAULT_BACKEND
    if name == "python":
        return _pykernels
    if name == "native":
        if _native is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return _native
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["native", "python"] if NATIVE_AVAILABLE else ["python"]


@lru_cache(maxsize=8)
def _table(size: int) -> np.ndarray:
    t = np.zeros(size + 1)
    for k in range(2, size + 1):
        t[k] = k * math.log2(k)
    t.setflags(write=False)
    return t


def xlogx_table(n: int) -> np.ndarray:
    """``t[k] = k*log2(k)`` for k ≤ n, shared by both kernels."""
    size = 64
    while size < n:
        size *= 2
    return _table(size)
