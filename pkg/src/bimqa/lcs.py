"""LCS length with the compiled kernel when available.

``BACKEND`` names the implementation picked at import: ``"cython"`` or
``"python"``. Set ``BIMQA_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _lcs_py

if os.environ.get("BIMQA_PURE_PYTHON"):
    _impl = _lcs_py
    BACKEND = "python"
else:
    try:
        from . import _lcs_c as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _lcs_py
        BACKEND = "python"

lcs_length = _impl.lcs_length
lcs_length_dp = _impl.lcs_length_dp

__all__ = ["BACKEND", "lcs_length", "lcs_length_dp"]
