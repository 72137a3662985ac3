"""Pure-numpy kernel implementations.

Fallback backend used when the compiled extension is unavailable (or disabled
via PAIRTRACK_NO_EXT=1). Semantics must match _core.pyx exactly; the test
suite cross-checks both when the extension is importable.
"""

from __future__ import annotations

import numpy as np


def _corners(boxes: np.ndarray) -> tuple[np.ndarray, ...]:
    # center form -> (x1, y1, x2, y2)
    cx, cy, w, h = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2


def _inter_union_hull(a: np.ndarray, b: np.ndarray):
    """Pairwise intersection, union, and hull areas for (N,4) vs (M,4)."""
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = np.clip(np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(ax1[:, None], bx1[None, :]), 0, None)
    ih = np.clip(np.minimum(ay2[:, None], by2[None, :]) - np.maximum(ay1[:, None], by1[None, :]), 0, None)
    inter = iw * ih
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a[:, None] + area_b[None, :] - inter
    hw = np.maximum(ax2[:, None], bx2[None, :]) - np.minimum(ax1[:, None], bx1[None, :])
    hh = np.maximum(ay2[:, None], by2[None, :]) - np.minimum(ay1[:, None], by1[None, :])
    return inter, union, hw * hh


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    inter, union, _ = _inter_union_hull(a, b)
    return inter / union


def pairwise_iou3d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    i1, u1, _ = _inter_union_hull(a[:, :4], b[:, :4])
    i2, u2, _ = _inter_union_hull(a[:, 4:], b[:, 4:])
    return (i1 + i2) / (u1 + u2)


def pairwise_giou3d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    i1, u1, h1 = _inter_union_hull(a[:, :4], b[:, :4])
    i2, u2, h2 = _inter_union_hull(a[:, 4:], b[:, 4:])
    return (i1 + i2) / (u1 + u2) - np.abs((h1 - u1) + (h2 - u2)) / np.abs(h1 + h2)


def nms_keep(boxes: np.ndarray, scores: np.ndarray, n_th: float) -> np.ndarray:
    """Greedy paired NMS; returns kept indices in descending-score order.

    boxes is (N, 8): prev box then cur box, center form. Suppression
    condition is iou3d strictly greater than n_th.
    """
    order = np.argsort(-scores, kind="stable")
    keep: list[int] = []
    while order.size > 0:
        i = order[0]
        keep.append(int(i))
        if order.size == 1:
            break
        rest = order[1:]
        ious = pairwise_iou3d(boxes[i : i + 1], boxes[rest])[0]
        order = rest[ious <= n_th]
    return np.asarray(keep, dtype=np.int64)
