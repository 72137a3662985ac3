"""Noise schedule, scaling coefficients, box corruption, and the
consistency-function parameterization.

Box signals are plain float64 arrays: (N, 4) for single-frame boxes, (N, 8)
for paired boxes (prev 4 columns, cur 4 columns), in a normalized signal
space centered on zero with half-range 2*sigma_data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box, PairedBox


@dataclass(frozen=True)
class NoiseSchedule:
    """Karras-style decreasing sigma ramp plus data-scale constant.

    half_scale toggles the extra factor-of-two shrink applied after input
    scaling in corrupt(); on by default.
    """

    T: int = 40
    sigma_min: float = 0.002
    sigma_max: float = 80.0
    rho: float = 7.0
    sigma_data: float = 0.5
    half_scale: bool = True

    def __post_init__(self) -> None:
        if self.T < 2:
            raise ValueError(f"T must be >= 2, got {self.T}")
        if not (0 < self.sigma_min < self.sigma_max):
            raise ValueError("need 0 < sigma_min < sigma_max")
        if self.rho <= 0 or self.sigma_data <= 0:
            raise ValueError("rho and sigma_data must be positive")

    @property
    def signal_scale(self) -> float:
        # half-range of the normalized box signal
        return 2.0 * self.sigma_data


def sigma_at(t: float, sched: NoiseSchedule) -> float:
    """Noise level at (possibly fractional) step t in [0, T-1].

    Strictly decreasing in t; endpoints returned exactly.
    """
    last = sched.T - 1
    if not (0 <= t <= last):
        raise ValueError(f"t must be in [0, {last}], got {t}")
    if t == 0:
        return sched.sigma_max
    if t == last:
        return sched.sigma_min
    inv_rho = 1.0 / sched.rho
    max_ir = sched.sigma_max**inv_rho
    min_ir = sched.sigma_min**inv_rho
    return (max_ir + (t / last) * (min_ir - max_ir)) ** sched.rho


def coefficients(sigma: float, sched: NoiseSchedule) -> tuple[float, float, float]:
    """(c_in, c_skip, c_out) at a noise level.

    c_skip(sigma_min) = 1 and c_out(sigma_min) = 0 exactly, so the decoded
    signal at the lowest noise level is the input itself.
    """
    if sigma < sched.sigma_min:
        raise ValueError(f"sigma must be >= sigma_min={sched.sigma_min}, got {sigma}")
    sd2 = sched.sigma_data**2
    shifted = sigma - sched.sigma_min
    c_in = 1.0 / np.sqrt(sigma**2 + sd2)
    c_skip = sd2 / (shifted**2 + sd2)
    c_out = sched.sigma_data * shifted / np.sqrt(sd2 + sigma**2)
    return float(c_in), float(c_skip), float(c_out)


def input_scale(sigma: float, sched: NoiseSchedule) -> float:
    """Preconditioning factor applied to (signal + noise) at a noise level.

    Exactly 1 at sigma_min: the lowest level leaves clean data untouched, so
    the boundary identity of the skip composition maps clean to clean. The
    c_in-based factor would sit at 0.999992 there, which is close enough to
    hide in sampling but breaks exact floors in training-loss checks.
    """
    if sigma == sched.sigma_min:
        return 1.0
    c_in, _, _ = coefficients(sigma, sched)
    return c_in / 2.0 if sched.half_scale else c_in


def corrupt(x_s: np.ndarray, t: float, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Noise a clean signal at step t: scale-in of (x_s + eps * sigma_t).

    eps holds unit-Gaussian draws with the same shape as x_s.
    """
    x_s = np.asarray(x_s, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x_s.shape:
        raise ValueError(f"eps shape {eps.shape} != signal shape {x_s.shape}")
    sig = sigma_at(t, sched)
    return input_scale(sig, sched) * (x_s + eps * sig)


def consistency_apply(
    x_t: np.ndarray, raw: np.ndarray, sigma: float, sched: NoiseSchedule
) -> np.ndarray:
    """Compose the skip connection: c_skip(sigma)*x_t + c_out(sigma)*raw.

    At sigma = sigma_min this is exactly the identity on x_t for any raw.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != x_t.shape:
        raise ValueError(f"raw shape {raw.shape} != signal shape {x_t.shape}")
    _, c_skip, c_out = coefficients(sigma, sched)
    return c_skip * x_t + c_out * raw


def normalize_array(boxes: np.ndarray, image_w: float, image_h: float, sched: NoiseSchedule) -> np.ndarray:
    """Map pixel center-form boxes to signal space.

    Accepts (N, 4) or paired (N, 8) arrays. Per-axis fractions of the canvas
    are mapped affinely from [0, 1] to [-s, s] with s = 2*sigma_data.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError("image dims must be positive")
    boxes = np.asarray(boxes, dtype=np.float64)
    ncol = boxes.shape[-1]
    if ncol not in (4, 8):
        raise ValueError(f"expected 4 or 8 columns, got {ncol}")
    denom = np.array([image_w, image_h, image_w, image_h] * (ncol // 4))
    frac = boxes / denom
    return (2.0 * frac - 1.0) * sched.signal_scale


def denormalize_array(signal: np.ndarray, image_w: float, image_h: float, sched: NoiseSchedule) -> np.ndarray:
    """Inverse of normalize_array with clamping into the canvas.

    Centers clamp into [0, dim]; sizes clamp into [1e-4, 1]*dim so every
    decoded box satisfies the positivity invariant.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError("image dims must be positive")
    signal = np.asarray(signal, dtype=np.float64)
    ncol = signal.shape[-1]
    if ncol not in (4, 8):
        raise ValueError(f"expected 4 or 8 columns, got {ncol}")
    frac = (signal / sched.signal_scale + 1.0) / 2.0
    reps = ncol // 4
    dims = np.array([image_w, image_h, image_w, image_h] * reps)
    out = frac * dims
    lo = np.array([0.0, 0.0, 1e-4 * image_w, 1e-4 * image_h] * reps)
    hi = np.array([image_w, image_h, image_w, image_h] * reps)
    return np.clip(out, lo, hi)


def normalize_boxes(boxes: list[Box], image_w: float, image_h: float, sched: NoiseSchedule) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    arr = np.stack([b.to_array() for b in boxes])
    return normalize_array(arr, image_w, image_h, sched)


def denormalize_boxes(signal: np.ndarray, image_w: float, image_h: float, sched: NoiseSchedule) -> list[Box]:
    arr = denormalize_array(signal, image_w, image_h, sched)
    return [Box.from_array(row) for row in arr]


def normalize_pairs(pairs: list[PairedBox], image_w: float, image_h: float, sched: NoiseSchedule) -> np.ndarray:
    if not pairs:
        return np.zeros((0, 8), dtype=np.float64)
    arr = np.stack([p.to_array() for p in pairs])
    return normalize_array(arr, image_w, image_h, sched)


def denormalize_pairs(signal: np.ndarray, image_w: float, image_h: float, sched: NoiseSchedule) -> list[PairedBox]:
    arr = denormalize_array(signal, image_w, image_h, sched)
    return [PairedBox.from_array(row) for row in arr]
