"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``XYOTTO_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("XYOTTO_PURE_PYTHON", "") not in ("", "0"):
    _kernels = None
else:
    try:
        from . import _kernels
    except ImportError:
        _kernels = None

COMPILED = _kernels is not None
kernel = _kernels if COMPILED else _fallback
BACKEND = "cython" if COMPILED else "numpy"

jacobi_eigh = kernel.jacobi_eigh
propagate_schedule = kernel.propagate_schedule
