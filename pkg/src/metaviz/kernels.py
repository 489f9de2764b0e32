"""Backend selection for the per-sample kernels.

The compiled extension is used when importable; otherwise the numpy
fallback. ``METAVIZ_BACKEND=python`` forces the fallback and
``METAVIZ_BACKEND=compiled`` makes a missing extension an import error.
Both backends expose the same functions and return bit-identical results.
"""

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

_choice = os.environ.get("METAVIZ_BACKEND", "auto").lower()

try:
    if _choice == "python":
        raise ImportError("fallback requested")
    from . import _ckernels as _compiled
except ImportError as exc:
    if _choice == "compiled":
        raise
    _compiled = None
    log.debug("compiled kernels unavailable: %s", exc)

backend = _compiled if _compiled is not None else _pykernels
python_backend = _pykernels
compiled_backend = _compiled
NAME = backend.NAME


def get(name=None):
    """Return a backend module by name (``None`` gives the active one)."""
    if name is None:
        return backend
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available():
    return ["compiled", "python"] if _compiled is not None else ["python"]
