"""Kernel selection: the compiled extension when built, numpy otherwise.

Set ``MATCHILLUM_PURE_PYTHON=1`` to force the numpy implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
subset_residuals_best = _kernels_py.subset_residuals_best

if os.environ.get("MATCHILLUM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        subset_residuals_best = _compiled.subset_residuals_best
        BACKEND = "cython"

__all__ = ["BACKEND", "subset_residuals_best"]
