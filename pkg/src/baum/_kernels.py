"""Kernel backend selection.

The compiled extension is preferred; set ``BAUM_PURE_PYTHON=1`` to force the
numpy fallback (useful for benchmarking and for environments without a C
compiler).
"""

import os

from baum import _fallback

if os.environ.get("BAUM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from baum import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

sample_rows = _impl.sample_rows
sample_lambda = _impl.sample_lambda
bond_labels = _impl.bond_labels
