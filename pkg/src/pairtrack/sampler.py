"""Iterative paired-box denoising inference.

Proposals start as corrupted repeats of prior boxes plus pure noise, walk a
decreasing sigma grid with per-step renewal (drop low-scoring proposals,
replenish with fresh noise), and the final step's decoded predictions are
suppressed with paired NMS.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .denoiser import Denoiser, FrameContext
from .geometry import Box, PairedBox, PairedDetection, nms_paired
from .schedule import (
    NoiseSchedule,
    consistency_apply,
    corrupt,
    denormalize_array,
    normalize_array,
    sigma_at,
)


@dataclass(frozen=True)
class SamplerConfig:
    n_p: int = 2000  # proposal count
    n_ss: int = 2  # sampling steps
    n_rp: int = 8  # prior repeat count
    b_th: float = 0.6  # renewal score threshold
    n_th: float = 0.5  # NMS overlap threshold
    sched: NoiseSchedule = field(default_factory=NoiseSchedule)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_p < 1:
            raise ValueError(f"n_p must be >= 1, got {self.n_p}")
        if not (1 <= self.n_ss <= self.sched.T):
            raise ValueError(f"n_ss must be in [1, T={self.sched.T}], got {self.n_ss}")
        if self.n_rp < 0:
            raise ValueError(f"n_rp must be >= 0, got {self.n_rp}")
        # b_th = 0 is legal and disables renewal
        if not (0 <= self.b_th < 1):
            raise ValueError(f"b_th must be in [0, 1), got {self.b_th}")
        if not (0 < self.n_th < 1):
            raise ValueError(f"n_th must be in (0, 1), got {self.n_th}")


@dataclass
class ProposalState:
    """Noisy paired signals plus provenance slots.

    Slots below the prior-derived count identify proposals seeded from the
    previous frame's boxes; replenished proposals get fresh slots so the tag
    survives renewal and NMS reordering. next_slot is the allocation cursor.
    """

    x: np.ndarray  # (n_p, 8)
    slots: np.ndarray  # (n_p,) int64
    next_slot: int


def init_proposals(
    prior: list[Box],
    ctx: FrameContext,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> ProposalState:
    """Seed the proposal set from prior boxes plus pure noise at sigma_max.

    Each prior box is repeated n_rp times (duplicated into both frame slots)
    and corrupted at t=0; remaining slots are corruptions of the zero signal
    at t=0 (unit-Gaussian draws at the sigma_max scale). Overflowing repeats
    are truncated in input order.
    """
    sched = cfg.sched
    repeats: list[Box] = []
    for b in prior:
        repeats.extend([b] * cfg.n_rp)
    if len(repeats) > cfg.n_p:
        warnings.warn(
            f"prior repeats ({len(repeats)}) exceed n_p ({cfg.n_p}); truncating",
            stacklevel=2,
        )
        repeats = repeats[: cfg.n_p]
    n_prior = len(repeats)

    parts = []
    if n_prior:
        arr4 = np.stack([b.to_array() for b in repeats])
        paired = np.concatenate([arr4, arr4], axis=1)  # same box in both slots
        signal = normalize_array(paired, ctx.image_w, ctx.image_h, sched)
        eps = rng.standard_normal(signal.shape)
        parts.append(corrupt(signal, 0, eps, sched))
    n_fill = cfg.n_p - n_prior
    if n_fill:
        parts.append(_noise_fill(n_fill, 0.0, cfg, rng))
    x = np.concatenate(parts, axis=0) if parts else np.zeros((0, 8))
    return ProposalState(x=x, slots=np.arange(cfg.n_p, dtype=np.int64), next_slot=cfg.n_p)


def _noise_fill(n: int, t: float, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    # a pure-noise proposal is the corruption of the zero signal (the
    # canvas-centered box pair), keeping every proposal in corrupt space
    return corrupt(np.zeros((n, 8)), t, rng.standard_normal((n, 8)), cfg.sched)


def _as_detections(
    x0: np.ndarray,
    cls_scores: np.ndarray,
    assoc_scores: np.ndarray,
    slots: np.ndarray,
    ctx: FrameContext,
    sched: NoiseSchedule,
) -> list[PairedDetection]:
    px = denormalize_array(x0, ctx.image_w, ctx.image_h, sched)
    return [
        PairedDetection(
            boxes=PairedBox.from_array(px[i]),
            cls_score=float(np.clip(cls_scores[i], 0.0, 1.0)),
            assoc_score=float(np.clip(assoc_scores[i], 0.0, 1.0)),
            slot=int(slots[i]),
        )
        for i in range(px.shape[0])
    ]


def sample_step(
    ctx: FrameContext,
    state: ProposalState,
    t: float,
    t_next: float,
    denoiser: Denoiser,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[ProposalState, list[PairedDetection]]:
    """One denoise/renew/move/replenish step from t to t_next.

    Returns the next noisy state and this step's decoded predictions (the
    final step's predictions are the harvest fed to NMS).
    """
    sched = cfg.sched
    sigma_t = sigma_at(t, sched)
    sigma_next = sigma_at(t_next, sched)

    pred = denoiser.predict(ctx, state.x, sigma_t)
    x0 = consistency_apply(state.x, pred.boxes, sigma_t, sched)
    dets = _as_detections(x0, pred.cls_scores, pred.assoc_scores, state.slots, ctx, sched)

    combined = np.clip(pred.cls_scores, 0, 1) * np.clip(pred.assoc_scores, 0, 1)
    survive = combined >= cfg.b_th
    x_b = state.x[survive]
    x0_s = x0[survive]
    slots_s = state.slots[survive]

    # Euler move of survivors toward the next noise level
    grad = (x_b - x0_s) / sigma_t
    moved = x_b + grad * (sigma_next - sigma_t)

    n_fill = cfg.n_p - moved.shape[0]
    next_slot = state.next_slot
    if n_fill:
        fresh = _noise_fill(n_fill, t_next, cfg, rng)
        moved = np.concatenate([moved, fresh], axis=0)
        new_slots = np.arange(next_slot, next_slot + n_fill, dtype=np.int64)
        slots_s = np.concatenate([slots_s, new_slots])
        next_slot += n_fill
    return ProposalState(x=moved, slots=slots_s, next_slot=next_slot), dets


def step_grid(cfg: SamplerConfig) -> list[float]:
    """The t-grid walked by run_inference: n_ss+1 points from 0 to T-1.

    Evenly spaced at T/n_ss, clamped so the final point (and any overshoot)
    sits exactly at the lowest noise level.
    """
    last = cfg.sched.T - 1
    return [min(i * cfg.sched.T / cfg.n_ss, float(last)) for i in range(cfg.n_ss + 1)]


def run_inference(
    ctx: FrameContext,
    prior: list[Box],
    denoiser: Denoiser,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> list[PairedDetection]:
    """Full inference for one frame pair: init, n_ss steps, paired NMS.

    Output is sorted by combined score descending.
    """
    grid = step_grid(cfg)
    state = init_proposals(prior, ctx, cfg, rng)
    dets: list[PairedDetection] = []
    for t, t_next in zip(grid[:-1], grid[1:]):
        state, dets = sample_step(ctx, state, t, t_next, denoiser, cfg, rng)
    return nms_paired(dets, cfg.n_th)
