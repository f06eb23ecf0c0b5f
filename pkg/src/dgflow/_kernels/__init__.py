"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is used.  Setting ``DGFLOW_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

python_backend = _pykernels

compiled_backend = None
if os.environ.get("DGFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

poly_eval = backend.poly_eval
poly_eval_segment = backend.poly_eval_segment

__all__ = ["BACKEND", "backend", "compiled_backend", "poly_eval", "poly_eval_segment", "python_backend"]
