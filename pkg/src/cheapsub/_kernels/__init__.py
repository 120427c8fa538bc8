"""Kernel selection: compiled extension if built, numpy fallback otherwise.

Set ``CHEAPSUB_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the backend parity tests).
"""

import os

from . import _pyfallback

if os.environ.get("CHEAPSUB_PURE_PYTHON") == "1":
    _impl = _pyfallback
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = _pyfallback

irls = _impl.irls
BACKEND = _impl.BACKEND

CONVERGED_SCORE = _pyfallback.CONVERGED_SCORE
CONVERGED_STALL = _pyfallback.CONVERGED_STALL
MAX_ITER = _pyfallback.MAX_ITER
SINGULAR = _pyfallback.SINGULAR
DIVERGED = _pyfallback.DIVERGED
