"""Kernel backend selection: compiled extension when built, numpy otherwise.

Set FEDMARKOV_PURE=1 to force the numpy fallback (used by the benchmark and
the backend-parity tests).
"""

import os

from . import _kernels_py

if os.environ.get("FEDMARKOV_PURE"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

count_pairs = _impl.count_pairs
gap_path = _impl.gap_path


def backend() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return BACKEND
