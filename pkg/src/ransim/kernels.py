"""Hot-kernel dispatch.

The compiled extension is used when it imports; set ``RANSIM_PURE_PYTHON=1``
to force the numpy fallback. Both expose the same three functions.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("RANSIM_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

pair_ci_db = _impl.pair_ci_db
slotted_interfered = _impl.slotted_interfered
rb_sinr = _impl.rb_sinr


def backends() -> dict:
    """All importable implementations, keyed by name (used by tests and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
