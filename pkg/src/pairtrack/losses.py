"""GT padding, set matching, the focal/L1/GIoU stack, and the two-timestep
training loss.

Padded GT pairs fill the population up to a fixed count; they take part in
matching but predictions assigned to them are treated as classification
negatives only, never as box-regression targets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .denoiser import Denoiser, FrameContext
from .geometry import Box, PairedBox, PairedDetection, pairwise_giou3d, rowwise_iou3d
from .schedule import (
    NoiseSchedule,
    consistency_apply,
    corrupt,
    denormalize_array,
    normalize_array,
    sigma_at,
)

FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0
_P_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    lambda_cls: float = 2.0
    lambda_l1: float = 5.0
    lambda_giou3d: float = 2.0

    def __post_init__(self) -> None:
        if min(self.lambda_cls, self.lambda_l1, self.lambda_giou3d) <= 0:
            raise ValueError("loss weights must be positive")


@dataclass(frozen=True)
class GTPair:
    identity: int
    boxes: PairedBox
    is_padding: bool = False


def pad_gt(
    gt: list[GTPair],
    n_train: int,
    rng: np.random.Generator,
    image_w: float = 1440.0,
    image_h: float = 800.0,
) -> list[GTPair]:
    """Fill the GT population up to n_train with flagged padding pairs.

    Padding is drawn by jittering randomly chosen real pairs (center std =
    10% of box size, sizes scaled by 1 + 0.1*N(0,1) kept positive); an empty
    scene pads with boxes uniform over the canvas.
    """
    if n_train < len(gt):
        warnings.warn(
            f"n_train ({n_train}) < gt count ({len(gt)}); subsampling", stacklevel=2
        )
        idx = rng.choice(len(gt), size=n_train, replace=False)
        return [gt[i] for i in sorted(idx)]

    def _jitter(b: Box) -> Box:
        cx = b.cx + rng.normal(0.0, 0.1 * b.w)
        cy = b.cy + rng.normal(0.0, 0.1 * b.h)
        w = b.w * max(0.1, 1.0 + 0.1 * rng.normal())
        h = b.h * max(0.1, 1.0 + 0.1 * rng.normal())
        return Box(cx, cy, w, h)

    def _uniform() -> Box:
        return Box(
            rng.uniform(0, image_w),
            rng.uniform(0, image_h),
            rng.uniform(0.02 * image_w, 0.3 * image_w),
            rng.uniform(0.02 * image_h, 0.3 * image_h),
        )

    out = list(gt)
    for _ in range(n_train - len(gt)):
        if gt:
            src = gt[int(rng.integers(len(gt)))]
            pair = PairedBox(_jitter(src.boxes.prev), _jitter(src.boxes.cur))
        else:
            pair = PairedBox(_uniform(), _uniform())
        out.append(GTPair(identity=-1, boxes=pair, is_padding=True))
    return out


def _signals(paired_px: np.ndarray, image_w: float, image_h: float, sched: NoiseSchedule) -> np.ndarray:
    return normalize_array(paired_px, image_w, image_h, sched)


def match_predictions(
    preds: list[PairedDetection],
    gt: list[GTPair],
    w: LossWeights,
    image_w: float,
    image_h: float,
    sched: NoiseSchedule | None = None,
) -> list[tuple[int, int]]:
    """Optimal one-to-one assignment of predictions to GT pairs.

    Cost combines classification confidence, normalized-coordinate L1, and
    paired generalized IoU with the loss weights. Returns (pred_idx, gt_idx)
    pairs; unmatched predictions are negatives.
    """
    if not preds or not gt:
        return []
    sched = sched or NoiseSchedule()
    p_px = np.stack([p.boxes.to_array() for p in preds])
    g_px = np.stack([g.boxes.to_array() for g in gt])
    p_sig = _signals(p_px, image_w, image_h, sched)
    g_sig = _signals(g_px, image_w, image_h, sched)
    cls = np.array([p.cls_score for p in preds])

    l1 = np.abs(p_sig[:, None, :] - g_sig[None, :, :]).sum(axis=-1)
    giou = pairwise_giou3d(p_px, g_px)
    cost = w.lambda_cls * (1.0 - cls)[:, None] + w.lambda_l1 * l1 + w.lambda_giou3d * (1.0 - giou)
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def focal_loss(
    p: float,
    is_positive: bool,
    alpha: float = FOCAL_ALPHA,
    gamma: float = FOCAL_GAMMA,
) -> float:
    """Focal classification loss for one confidence value."""
    p = min(max(p, _P_CLAMP), 1.0 - _P_CLAMP)
    if is_positive:
        return -alpha * (1.0 - p) ** gamma * math.log(p)
    return -(1.0 - alpha) * p**gamma * math.log(1.0 - p)


@dataclass(frozen=True)
class LossBreakdown:
    cls_term: float
    l1_term: float
    giou3d_term: float
    n_matched: int
    n_negative: int

    @property
    def total(self) -> float:
        return self.cls_term + self.l1_term + self.giou3d_term


def total_loss(
    preds: list[PairedDetection],
    gt: list[GTPair],
    w: LossWeights,
    image_w: float,
    image_h: float,
    sched: NoiseSchedule | None = None,
) -> LossBreakdown:
    """Weighted focal + L1 + paired-GIoU loss with per-term breakdown.

    Predictions matched to real GT are positives with box terms; predictions
    matched to padding or left unmatched are classification negatives only.
    """
    sched = sched or NoiseSchedule()
    assignment = match_predictions(preds, gt, w, image_w, image_h, sched)
    matched_real = [(pi, gi) for pi, gi in assignment if not gt[gi].is_padding]
    positive = {pi for pi, _ in matched_real}

    cls_term = 0.0
    for i, p in enumerate(preds):
        cls_term += focal_loss(p.cls_score, i in positive)

    l1_term = 0.0
    giou_term = 0.0
    if matched_real:
        p_px = np.stack([preds[pi].boxes.to_array() for pi, _ in matched_real])
        g_px = np.stack([gt[gi].boxes.to_array() for _, gi in matched_real])
        p_sig = _signals(p_px, image_w, image_h, sched)
        g_sig = _signals(g_px, image_w, image_h, sched)
        l1_term = float(np.abs(p_sig - g_sig).sum())
        # giou on the diagonal of the matched pairs only
        iou_pen = np.array(
            [pairwise_giou3d(p_px[k : k + 1], g_px[k : k + 1])[0, 0] for k in range(len(matched_real))]
        )
        giou_term = float(np.sum(1.0 - iou_pen))
    return LossBreakdown(
        cls_term=w.lambda_cls * cls_term,
        l1_term=w.lambda_l1 * l1_term,
        giou3d_term=w.lambda_giou3d * giou_term,
        n_matched=len(matched_real),
        n_negative=len(preds) - len(matched_real),
    )


def _decode_to_detections(
    ctx: FrameContext,
    x: np.ndarray,
    sigma_t: float,
    denoiser: Denoiser,
    sched: NoiseSchedule,
) -> list[PairedDetection]:
    pred = denoiser.predict(ctx, x, sigma_t)
    x0 = consistency_apply(x, pred.boxes, sigma_t, sched)
    px = denormalize_array(x0, ctx.image_w, ctx.image_h, sched)
    return [
        PairedDetection(
            boxes=PairedBox.from_array(px[i]),
            cls_score=float(np.clip(pred.cls_scores[i], 0, 1)),
            assoc_score=float(np.clip(pred.assoc_scores[i], 0, 1)),
        )
        for i in range(px.shape[0])
    ]


def consistency_training_loss(
    ctx: FrameContext,
    gt_padded: list[GTPair],
    t_r: int,
    eps: np.ndarray,
    denoiser: Denoiser,
    w: LossWeights,
    sched: NoiseSchedule,
) -> tuple[float, LossBreakdown, LossBreakdown]:
    """Two-timestep training loss at a random step t_r.

    The padded GT signal is corrupted at t_r and at t_r-1 with the same unit
    draws (the adjacent point on the same exact trajectory), both are decoded
    at their noise levels, and the two set losses are summed. Returns
    (total, breakdown at t_r-1, breakdown at t_r).
    """
    if not (1 <= t_r <= sched.T - 1):
        raise ValueError(f"t_r must be in [1, {sched.T - 1}], got {t_r}")
    pairs = np.stack([g.boxes.to_array() for g in gt_padded])
    x_s = normalize_array(pairs, ctx.image_w, ctx.image_h, sched)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x_s.shape:
        raise ValueError(f"eps shape {eps.shape} != padded signal shape {x_s.shape}")

    x_hi = corrupt(x_s, t_r, eps, sched)
    x_lo = corrupt(x_s, t_r - 1, eps, sched)
    dets_hi = _decode_to_detections(ctx, x_hi, sigma_at(t_r, sched), denoiser, sched)
    dets_lo = _decode_to_detections(ctx, x_lo, sigma_at(t_r - 1, sched), denoiser, sched)
    loss_lo = total_loss(dets_lo, gt_padded, w, ctx.image_w, ctx.image_h, sched)
    loss_hi = total_loss(dets_hi, gt_padded, w, ctx.image_w, ctx.image_h, sched)
    return loss_lo.total + loss_hi.total, loss_lo, loss_hi
