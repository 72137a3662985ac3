"""Tracking evaluation: CLEAR-family metrics, identity F1, MT/ML/Frag.

Per-frame matching keeps previous pairings alive while they still overlap
(match persistence) and resolves the remainder with an optimal assignment;
identity metrics use a global trajectory bijection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import boxes_to_array, pairwise_iou
from .sequences import SequenceGT, SequenceResult


@dataclass
class MotMetrics:
    mota: float
    idf1: float
    idp: float
    idr: float
    fp: int
    fn: int
    idsw: int
    frag: int
    mt: int
    ml: int
    gt_total: int

    def as_row(self) -> dict:
        return {
            "mota": self.mota,
            "idf1": self.idf1,
            "idp": self.idp,
            "idr": self.idr,
            "fp": self.fp,
            "fn": self.fn,
            "idsw": self.idsw,
            "frag": self.frag,
            "mt": self.mt,
            "ml": self.ml,
            "gt_total": self.gt_total,
        }


def hungarian(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment.

    Infinite entries mark forbidden pairs; assignments landing on them are
    dropped from the result.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return []
    finite = np.isfinite(cost)
    if not finite.any():
        return []
    # replace forbidden entries with a cost large enough never to matter
    big = np.abs(cost[finite]).max() * (min(cost.shape) + 1) + 1.0
    safe = np.where(finite, cost, big)
    rows, cols = linear_sum_assignment(safe)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if finite[r, c]]


def _frame_union(gt: SequenceGT, res: SequenceResult) -> list[int]:
    return sorted(set(gt.frames) | set(res.frames))


def clear_mot(
    gt: SequenceGT,
    res: SequenceResult,
    iou_match: float = 0.5,
    persistent: bool = True,
) -> MotMetrics:
    """CLEAR metrics plus identity F1 and trajectory coverage counts.

    persistent=False switches to strict independent per-frame assignment
    (cross-checking mode); the default keeps the previous frame's pairings
    whenever they still overlap.
    """
    fp = fn = idsw = frag = 0
    gt_total = 0
    # most-recent-ever matched hypothesis per gt id (persists across gaps)
    last_hyp: dict[int, int] = {}
    # pairing carried frame to frame for match persistence
    carried: dict[int, int] = {}
    covered: dict[int, int] = {}  # gt id -> matched frame count
    lifespan: dict[int, int] = {}  # gt id -> visible frame count
    in_gap: dict[int, bool] = {}  # gt id -> currently unmatched after a match

    for frame in _frame_union(gt, res):
        gt_objs = gt.visible_at(frame)
        hyps = [(e.identity, e.box) for e in res.entries(frame)]
        gt_total += len(gt_objs)
        for gid, _ in gt_objs:
            lifespan[gid] = lifespan.get(gid, 0) + 1

        gt_ids = [g for g, _ in gt_objs]
        hyp_ids = [h for h, _ in hyps]
        matches: dict[int, int] = {}
        if gt_objs and hyps:
            iou = pairwise_iou(
                boxes_to_array([b for _, b in gt_objs]),
                boxes_to_array([b for _, b in hyps]),
            )
            taken_g: set[int] = set()
            taken_h: set[int] = set()
            if persistent:
                for gi, gid in enumerate(gt_ids):
                    hid = carried.get(gid)
                    if hid is None or hid not in hyp_ids:
                        continue
                    hi = hyp_ids.index(hid)
                    if hi in taken_h:
                        continue
                    if iou[gi, hi] >= iou_match:
                        matches[gid] = hid
                        taken_g.add(gi)
                        taken_h.add(hi)
            free_g = [gi for gi in range(len(gt_ids)) if gi not in taken_g]
            free_h = [hi for hi in range(len(hyp_ids)) if hi not in taken_h]
            if free_g and free_h:
                sub = iou[np.ix_(free_g, free_h)]
                cost = np.where(sub >= iou_match, 1.0 - sub, np.inf)
                for r, c in hungarian(cost):
                    matches[gt_ids[free_g[r]]] = hyp_ids[free_h[c]]

        fn += len(gt_objs) - len(matches)
        fp += len(hyps) - len(matches)
        for gid, hid in matches.items():
            prev = last_hyp.get(gid)
            if prev is not None and prev != hid:
                idsw += 1
            last_hyp[gid] = hid
            covered[gid] = covered.get(gid, 0) + 1
            if in_gap.get(gid):
                frag += 1
            in_gap[gid] = False
        for gid in gt_ids:
            if gid not in matches and gid in last_hyp:
                in_gap[gid] = True
        carried = dict(matches)

    mt = ml = 0
    for gid, span in lifespan.items():
        ratio = covered.get(gid, 0) / span
        if ratio >= 0.8:
            mt += 1
        elif ratio <= 0.2:
            ml += 1

    mota = 1.0 - (fn + fp + idsw) / gt_total if gt_total else math.nan
    f1, idp, idr = idf1(gt, res, iou_match)
    return MotMetrics(
        mota=mota,
        idf1=f1,
        idp=idp,
        idr=idr,
        fp=fp,
        fn=fn,
        idsw=idsw,
        frag=frag,
        mt=mt,
        ml=ml,
        gt_total=gt_total,
    )


def idf1(
    gt: SequenceGT, res: SequenceResult, iou_match: float = 0.5
) -> tuple[float, float, float]:
    """Identity F1/precision/recall under an optimal trajectory bijection.

    Overlap counts m(g, h) = number of frames where gt g and hypothesis h
    both appear and their boxes overlap at least iou_match; the bijection
    maximizes total overlap (identity true positives).
    """
    overlap: dict[tuple[int, int], int] = {}
    len_gt: dict[int, int] = {}
    len_hyp: dict[int, int] = {}
    for frame in _frame_union(gt, res):
        gt_objs = gt.visible_at(frame)
        hyps = [(e.identity, e.box) for e in res.entries(frame)]
        for gid, _ in gt_objs:
            len_gt[gid] = len_gt.get(gid, 0) + 1
        for hid, _ in hyps:
            len_hyp[hid] = len_hyp.get(hid, 0) + 1
        if gt_objs and hyps:
            iou = pairwise_iou(
                boxes_to_array([b for _, b in gt_objs]),
                boxes_to_array([b for _, b in hyps]),
            )
            for gi, (gid, _) in enumerate(gt_objs):
                for hi, (hid, _) in enumerate(hyps):
                    if iou[gi, hi] >= iou_match:
                        overlap[(gid, hid)] = overlap.get((gid, hid), 0) + 1

    total_gt = sum(len_gt.values())
    total_hyp = sum(len_hyp.values())
    if total_gt == 0 and total_hyp == 0:
        return math.nan, math.nan, math.nan

    gids = sorted(len_gt)
    hids = sorted(len_hyp)
    idtp = 0
    if overlap:
        m = np.zeros((len(gids), len(hids)))
        for (gid, hid), c in overlap.items():
            m[gids.index(gid), hids.index(hid)] = c
        rows, cols = linear_sum_assignment(-m)
        idtp = int(m[rows, cols].sum())

    idfn = total_gt - idtp
    idfp = total_hyp - idtp
    f1 = 2 * idtp / (2 * idtp + idfp + idfn) if (2 * idtp + idfp + idfn) else math.nan
    idp = idtp / total_hyp if total_hyp else math.nan
    idr = idtp / total_gt if total_gt else math.nan
    return f1, idp, idr
