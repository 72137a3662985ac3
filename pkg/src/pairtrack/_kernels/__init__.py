"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
semantically identical. Set PAIRTRACK_NO_EXT=1 to force the fallback.
BACKEND names the active implementation.
"""

import os

if os.environ.get("PAIRTRACK_NO_EXT"):
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _numpy as _impl

        BACKEND = "numpy"

pairwise_iou = _impl.pairwise_iou
pairwise_iou3d = _impl.pairwise_iou3d
pairwise_giou3d = _impl.pairwise_giou3d
nms_keep = _impl.nms_keep

__all__ = ["BACKEND", "pairwise_iou", "pairwise_iou3d", "pairwise_giou3d", "nms_keep"]
