"""Select the compiled kernel core at import time, with a NumPy fallback.

Setting ``GPMEAN_NO_EXTENSION=1`` in the environment forces the fallback
(used by the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("GPMEAN_NO_EXTENSION"):
    _core = None
else:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

HAVE_EXTENSION = _core is not None


def compiled():
    """The compiled core module, or None when unavailable/disabled."""
    return _core


def backend_name() -> str:
    return "extension" if HAVE_EXTENSION else "numpy"
