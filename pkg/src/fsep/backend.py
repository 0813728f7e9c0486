"""Kernel backend selection.

FSEP_BACKEND=numpy forces the pure-numpy path, FSEP_BACKEND=numba the jit
path; unset prefers numba and silently falls back to numpy when numba is
unavailable.  Both paths are bit-identical; the env var is read once at
import.
"""

from __future__ import annotations

import os

_requested = os.environ.get("FSEP_BACKEND", "").strip().lower()

if _requested == "numpy":
    from . import _kernels_numpy as kernels
elif _requested == "numba":
    from . import _kernels_numba as kernels
elif _requested == "":
    try:
        from . import _kernels_numba as kernels
    except ImportError:  # pragma: no cover
        from . import _kernels_numpy as kernels
else:
    raise RuntimeError(f"FSEP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")


def backend_name() -> str:
    return kernels.BACKEND_NAME
