"""Kernel selection: compiled extension if importable, pure Python otherwise.

Set ``EVOLSOLVE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("EVOLSOLVE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

factor_tridiagonal = _impl.factor_tridiagonal
march = _impl.march
