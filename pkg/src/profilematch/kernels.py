"""Kernel backend selection.

Prefers the compiled extension, falls back to the pure numpy/Python
implementations. ``PROFILEMATCH_PURE=1`` forces the fallback (used by the
parity tests and the benchmark).
"""

import os

from . import _kernels_py

_impl = _kernels_py
if os.environ.get("PROFILEMATCH_PURE", "") != "1":
    try:
        from . import _kernels as _compiled
        _impl = _compiled
    except ImportError:
        pass

BACKEND = _impl.backend_name()

levenshtein_u8 = _impl.levenshtein_u8
jaro_u32 = _impl.jaro_u32


def available_backends():
    """Name -> module for every importable backend (for benchmarks/tests)."""
    backends = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
        backends["compiled"] = _compiled
    except ImportError:
        pass
    return backends
