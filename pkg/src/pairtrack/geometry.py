"""Boxes, overlap measures, and paired non-max suppression.

All geometry is axis-aligned, center-form (cx, cy, w, h), double precision.
A paired box spans two adjacent frames; its "volume" overlap measures are the
two-frame area sums, so iou3d/giou3d reduce to per-frame rectangle arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounding box in center form, pixel units."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h)):
            raise ValueError("box fields must be finite")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2

    def to_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Box":
        return Box(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class PairedBox:
    """One hypothesis spanning two adjacent frames."""

    prev: Box
    cur: Box

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.prev.to_array(), self.cur.to_array()])

    @staticmethod
    def from_array(a) -> "PairedBox":
        return PairedBox(Box.from_array(a[:4]), Box.from_array(a[4:8]))


@dataclass
class PairedDetection:
    """A scored two-frame detection hypothesis.

    slot carries proposal provenance through the sampler: slots assigned at
    initialization identify prior-derived proposals after reordering.
    """

    boxes: PairedBox
    cls_score: float
    assoc_score: float
    class_id: int = 0
    slot: int = -1

    def __post_init__(self) -> None:
        if not (0.0 <= self.cls_score <= 1.0 and 0.0 <= self.assoc_score <= 1.0):
            raise ValueError(
                f"scores must be in [0,1], got cls={self.cls_score}, assoc={self.assoc_score}"
            )

    @property
    def combined_score(self) -> float:
        return self.cls_score * self.assoc_score


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    # areas from the same corner arithmetic as the intersection, so
    # iou(b, b) == 1.0 exactly for arbitrary float coordinates
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter / (area_a + area_b - inter)


def enclosing_box(a: Box, b: Box) -> Box:
    """Smallest axis-aligned box containing both inputs."""
    x1 = min(a.x1, b.x1)
    y1 = min(a.y1, b.y1)
    x2 = max(a.x2, b.x2)
    y2 = max(a.y2, b.y2)
    return Box((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def _inter_union(a: Box, b: Box) -> tuple[float, float]:
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    # corner-difference areas keep the self-overlap exact (see iou)
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter, area_a + area_b - inter


def iou3d(d: PairedBox, g: PairedBox) -> float:
    """Two-frame volume IoU: summed intersections over summed unions."""
    i1, u1 = _inter_union(d.prev, g.prev)
    i2, u2 = _inter_union(d.cur, g.cur)
    return (i1 + i2) / (u1 + u2)


def giou3d(d: PairedBox, g: PairedBox) -> float:
    """Two-frame generalized IoU in (-1, 1].

    iou3d minus the summed hull-minus-union penalty normalized by summed hull
    area. Hulls are at least as large as unions, so the absolute value around
    the summed numerator is redundant but kept for fidelity to the definition.
    """
    i1, u1 = _inter_union(d.prev, g.prev)
    i2, u2 = _inter_union(d.cur, g.cur)
    h1 = enclosing_box(d.prev, g.prev).area
    h2 = enclosing_box(d.cur, g.cur).area
    return (i1 + i2) / (u1 + u2) - abs((h1 - u1) + (h2 - u2)) / abs(h1 + h2)


def boxes_to_array(boxes: list[Box]) -> np.ndarray:
    """Stack boxes into an (N, 4) center-form float64 array."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.stack([b.to_array() for b in boxes])


def paired_to_array(pairs: list[PairedBox]) -> np.ndarray:
    """Stack paired boxes into an (N, 8) array: prev 4 then cur 4."""
    if not pairs:
        return np.zeros((0, 8), dtype=np.float64)
    return np.stack([p.to_array() for p in pairs])


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N, M) IoU matrix between center-form (N, 4) and (M, 4) box arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return _kernels.pairwise_iou(a, b)


def pairwise_iou3d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N, M) two-frame IoU matrix between (N, 8) and (M, 8) paired arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return _kernels.pairwise_iou3d(a, b)


def pairwise_giou3d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N, M) two-frame generalized-IoU matrix for paired arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return _kernels.pairwise_giou3d(a, b)


def rowwise_iou3d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N,) two-frame IoU between corresponding rows of (N, 8) arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    total_i = np.zeros(a.shape[0])
    total_u = np.zeros(a.shape[0])
    for off in (0, 4):
        acx, acy, aw, ah = (a[:, off + k] for k in range(4))
        bcx, bcy, bw, bh = (b[:, off + k] for k in range(4))
        iw = np.clip(
            np.minimum(acx + aw / 2, bcx + bw / 2) - np.maximum(acx - aw / 2, bcx - bw / 2),
            0,
            None,
        )
        ih = np.clip(
            np.minimum(acy + ah / 2, bcy + bh / 2) - np.maximum(acy - ah / 2, bcy - bh / 2),
            0,
            None,
        )
        inter = iw * ih
        total_i += inter
        total_u += aw * ah + bw * bh - inter
    return total_i / total_u


def nms_paired(dets: list[PairedDetection], n_th: float) -> list[PairedDetection]:
    """Greedy suppression in descending combined-score order.

    A detection is suppressed when its iou3d with an already-kept detection
    exceeds n_th. Equal scores keep input order (stable sort). Output is in
    descending combined-score order.
    """
    if not (0.0 < n_th < 1.0):
        raise ValueError(f"n_th must be in (0,1), got {n_th}")
    if not dets:
        return []
    boxes = np.stack([d.boxes.to_array() for d in dets])
    scores = np.array([d.combined_score for d in dets], dtype=np.float64)
    keep = _kernels.nms_keep(np.ascontiguousarray(boxes), scores, float(n_th))
    return [dets[i] for i in keep]
