"""The prediction-head contract and a ground-truth-driven oracle.

The sampler owns the skip-connection composition, so a denoiser returns the
raw head output; composing it via schedule.consistency_apply yields the
decoded signal. The oracle emulates a trained head with tunable error by
snapping proposals onto annotated objects.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .geometry import pairwise_iou3d, rowwise_iou3d
from .schedule import (
    NoiseSchedule,
    coefficients,
    denormalize_array,
    input_scale,
    normalize_array,
)
from .sequences import SequenceGT


@dataclass(frozen=True)
class FrameContext:
    """Identifies the frame pair being decoded.

    scene is a handle to GT annotations for oracle use; real denoisers must
    treat it as opaque.
    """

    frame_prev: int
    frame_cur: int
    image_w: float
    image_h: float
    scene: SequenceGT | None = None

    def __post_init__(self) -> None:
        if self.frame_cur < self.frame_prev:
            raise ValueError(
                f"frame_cur {self.frame_cur} must be >= frame_prev {self.frame_prev}"
            )


@dataclass
class RawPrediction:
    """Raw head output: paired box signals plus per-proposal scores."""

    boxes: np.ndarray  # (N, 8) signal space
    cls_scores: np.ndarray  # (N,)
    assoc_scores: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        n = self.boxes.shape[0]
        if self.cls_scores.shape != (n,) or self.assoc_scores.shape != (n,):
            raise ValueError("score arrays must match proposal count")
        for name, s in (("cls", self.cls_scores), ("assoc", self.assoc_scores)):
            if s.size and (s.min() < 0 or s.max() > 1):
                raise ValueError(f"{name} scores must lie in [0,1]")


class Denoiser(Protocol):
    def predict(self, ctx: FrameContext, noisy: np.ndarray, sigma: float) -> RawPrediction:
        """Decode noisy (N, 8) paired signals at a noise level.

        Must be deterministic given (ctx, noisy, sigma) and the
        implementation's own seed.
        """
        ...


@dataclass(frozen=True)
class OracleConfig:
    """Error model for the GT-driven oracle.

    center_noise is a pixel std-dev on box centers; size_noise a relative
    std-dev on box sizes; score_sharpness maps box error to score decay;
    false_positive_rate injects cross-identity pairs.
    """

    center_noise: float = 0.0
    size_noise: float = 0.0
    score_sharpness: float = 2.0
    false_positive_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.center_noise < 0 or self.size_noise < 0:
            raise ValueError("noise levels must be >= 0")
        if not (0 <= self.false_positive_rate <= 1):
            raise ValueError("false_positive_rate must be in [0,1]")


class OracleDenoiser:
    """Snaps each proposal to its best-overlapping annotated object.

    The returned raw output is solved so that the skip-connection composition
    reproduces the (perturbed) snapped box exactly at the given sigma.
    """

    def __init__(self, cfg: OracleConfig, sched: NoiseSchedule) -> None:
        self.cfg = cfg
        self.sched = sched

    def _rng(self, ctx: FrameContext, noisy: np.ndarray, sigma: float) -> np.random.Generator:
        # Deterministic per (seed, frame pair, sigma, input bytes): predict is
        # then a pure function while distinct sampling steps get fresh draws.
        sig_key = int(np.float64(sigma).view(np.uint64))
        data_key = zlib.crc32(np.ascontiguousarray(noisy).tobytes())
        ss = np.random.SeedSequence(
            (self.cfg.seed, ctx.frame_prev, ctx.frame_cur, sig_key, data_key)
        )
        return np.random.default_rng(ss)

    def predict(self, ctx: FrameContext, noisy: np.ndarray, sigma: float) -> RawPrediction:
        noisy = np.asarray(noisy, dtype=np.float64)
        if noisy.ndim != 2 or noisy.shape[1] != 8:
            raise ValueError(f"expected (N, 8) paired signals, got {noisy.shape}")
        n = noisy.shape[0]
        if n == 0:
            return RawPrediction(noisy.copy(), np.zeros(0), np.zeros(0))
        if ctx.scene is None:
            raise ValueError("oracle requires ctx.scene")
        eligible = ctx.scene.visible_pairs(ctx.frame_prev, ctx.frame_cur)
        if not eligible:
            return RawPrediction(noisy.copy(), np.zeros(n), np.zeros(n))

        rng = self._rng(ctx, noisy, sigma)
        gt_arr = np.stack([p.to_array() for _, p in eligible])  # (G, 8) pixels
        # Two readings of the preconditioned input: taken directly as signal
        # (how random fills spread over the canvas) and with the input scaling
        # undone (how a corrupted clean box round-trips exactly). A trained
        # head resolves this from context; the stand-in snaps on whichever
        # reading overlaps ground truth better, row by row.
        scale = input_scale(sigma, self.sched)
        prop_px = denormalize_array(noisy, ctx.image_w, ctx.image_h, self.sched)
        prop_px_unscaled = denormalize_array(
            noisy / scale, ctx.image_w, ctx.image_h, self.sched
        )
        overlaps = np.maximum(
            pairwise_iou3d(prop_px, gt_arr),
            pairwise_iou3d(prop_px_unscaled, gt_arr),
        )
        snap_idx = np.argmax(overlaps, axis=1)  # ties -> first = lowest id
        clean = gt_arr[snap_idx]  # (N, 8)

        target = clean.copy()
        if self.cfg.center_noise > 0:
            jitter = rng.normal(0.0, self.cfg.center_noise, size=(n, 4))
            target[:, [0, 1, 4, 5]] += jitter
        if self.cfg.size_noise > 0:
            factor = 1.0 + rng.normal(0.0, self.cfg.size_noise, size=(n, 4))
            target[:, [2, 3, 6, 7]] *= np.maximum(factor, 0.05)
        # keep perturbed boxes valid
        target[:, [2, 3, 6, 7]] = np.maximum(
            target[:, [2, 3, 6, 7]],
            [1e-4 * ctx.image_w, 1e-4 * ctx.image_h] * 2,
        )

        if self.cfg.center_noise == 0 and self.cfg.size_noise == 0:
            # target is clean bit-for-bit; self-overlap is 1 by definition and
            # corner arithmetic roundoff must not leak into the scores
            quality = np.ones(n)
        else:
            quality = np.clip(rowwise_iou3d(target, clean), 0.0, 1.0)
        cls_scores = np.exp(-self.cfg.score_sharpness * (1.0 - quality))
        assoc_scores = cls_scores.copy()

        if self.cfg.false_positive_rate > 0 and len(eligible) >= 2:
            flip = rng.random(n) < self.cfg.false_positive_rate
            for i in np.flatnonzero(flip):
                # cross-identity pair: cur box borrowed from a different object
                other = int(rng.integers(len(eligible) - 1))
                if other >= snap_idx[i]:
                    other += 1
                target[i, 4:] = gt_arr[other, 4:]
                assoc_scores[i] = rng.uniform(0.0, 0.2)

        target_sig = normalize_array(target, ctx.image_w, ctx.image_h, self.sched)
        _, c_skip, c_out = coefficients(sigma, self.sched)
        if c_out == 0.0:
            raw = target_sig
        else:
            raw = (target_sig - c_skip * noisy) / c_out
        return RawPrediction(raw, cls_scores, assoc_scores)
