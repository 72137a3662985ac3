"""Paired-box denoising multi-object tracker.

A tracking pipeline where detections are two-frame box pairs produced by
iterative denoising over a consistency-style noise schedule, associated into
tracks by a four-stage Kalman cascade, with CLEAR/identity metrics, a
synthetic scene simulator, and a GT-driven oracle standing in for a trained
prediction head.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .denoiser import Denoiser, FrameContext, OracleConfig, OracleDenoiser, RawPrediction
from .geometry import (
    Box,
    PairedBox,
    PairedDetection,
    enclosing_box,
    giou3d,
    iou,
    iou3d,
    nms_paired,
)
from .kalman import KalmanParams, KalmanState, kalman_initiate, kalman_predict, kalman_update
from .losses import GTPair, LossWeights, consistency_training_loss, focal_loss, pad_gt, total_loss
from .metrics import MotMetrics, clear_mot, hungarian, idf1
from .sampler import SamplerConfig, init_proposals, run_inference, sample_step
from .schedule import NoiseSchedule, coefficients, consistency_apply, corrupt, sigma_at
from .sequences import SequenceGT, SequenceResult
from .sim import SimConfig, simulate
from .tracker import AssocConfig, PairTracker, stretch, stretch_batch, track_sequence

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Box",
    "PairedBox",
    "PairedDetection",
    "iou",
    "enclosing_box",
    "iou3d",
    "giou3d",
    "nms_paired",
    "NoiseSchedule",
    "sigma_at",
    "coefficients",
    "corrupt",
    "consistency_apply",
    "Denoiser",
    "FrameContext",
    "RawPrediction",
    "OracleConfig",
    "OracleDenoiser",
    "SamplerConfig",
    "init_proposals",
    "sample_step",
    "run_inference",
    "LossWeights",
    "GTPair",
    "pad_gt",
    "focal_loss",
    "total_loss",
    "consistency_training_loss",
    "KalmanParams",
    "KalmanState",
    "kalman_initiate",
    "kalman_predict",
    "kalman_update",
    "AssocConfig",
    "PairTracker",
    "stretch",
    "stretch_batch",
    "track_sequence",
    "MotMetrics",
    "hungarian",
    "clear_mot",
    "idf1",
    "SequenceGT",
    "SequenceResult",
    "SimConfig",
    "simulate",
    "__version__",
]
