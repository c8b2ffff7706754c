"""Backend selection for the hot loops.

The compiled module is used when it imports; set HEXOVERLAP_PURE=1 to force
the numpy/scipy fallback (handy for benchmarking and for cross-checks).
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HEXOVERLAP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

scan_overlaps = _impl.scan_overlaps
inflate_classes = _impl.inflate_classes
intensity = _impl.intensity
pack_keys = _pykernels.pack_keys

__all__ = ["BACKEND", "scan_overlaps", "inflate_classes", "intensity", "pack_keys"]
