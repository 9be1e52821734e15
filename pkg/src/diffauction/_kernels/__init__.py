"""Kernel backend selection.

The compiled extension is preferred when built; the numpy implementation is
the drop-in fallback. Set DIFFAUCTION_BACKEND=python|cython to force one
(forcing cython raises if the extension is missing).
"""

import os

from . import engine_py

_forced = os.environ.get("DIFFAUCTION_BACKEND")

if _forced == "python":
    impl = engine_py
else:
    try:
        from . import _engine_cy as impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "cython":
            raise
        impl = engine_py

BACKEND = impl.BACKEND_NAME


def available_backends():
    """Name -> module for every importable backend (used by tests and benchmarks)."""
    backends = {"python": engine_py}
    try:
        from . import _engine_cy
        backends["cython"] = _engine_cy
    except ImportError:
        pass
    return backends
