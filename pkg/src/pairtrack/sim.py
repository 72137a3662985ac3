"""Deterministic synthetic scene generator.

Objects move on a fixed canvas with linear or sinusoidal motion, reflect off
the borders (centers folded by a triangle wave, so boxes stay fully inside
and speed magnitude is preserved), and can be born, die, or be occluded for
scripted windows. No pixels are rendered; the oracle denoiser consumes
annotations directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box
from .sequences import SequenceGT


@dataclass(frozen=True)
class SimConfig:
    image_w: float = 1440.0
    image_h: float = 800.0
    n_objects: int = 8
    n_frames: int = 100
    speed_min: float = 1.0
    speed_max: float = 6.0
    size_min: float = 40.0
    size_max: float = 120.0
    occlusion_events: tuple[tuple[int, int, int, int], ...] = ()  # (id_a, id_b, start, duration)
    birth_death: tuple[tuple[int, int, int], ...] = ()  # (id, first_frame, last_frame)
    motion: str = "linear"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_frames < 2:
            raise ValueError("n_frames must be >= 2")
        if self.n_objects < 0:
            raise ValueError("n_objects must be >= 0")
        if self.motion not in ("linear", "sinusoidal"):
            raise ValueError(f"unknown motion model {self.motion!r}")
        if not (0 < self.size_min <= self.size_max):
            raise ValueError("need 0 < size_min <= size_max")
        if self.size_max >= min(self.image_w, self.image_h):
            raise ValueError("size_max must fit inside the canvas")


def _fold(x: float, lo: float, hi: float) -> float:
    """Reflect x into [lo, hi] by a triangle wave."""
    if hi <= lo:
        raise ValueError("empty fold interval: box larger than canvas")
    period = 2.0 * (hi - lo)
    y = (x - lo) % period
    return lo + (y if y <= hi - lo else period - y)


def _lifespans(cfg: SimConfig) -> dict[int, tuple[int, int]]:
    spans = {i: (0, cfg.n_frames - 1) for i in range(cfg.n_objects)}
    seen: set[int] = set()
    for oid, first, last in cfg.birth_death:
        if oid not in spans:
            raise ValueError(f"birth_death references unknown object {oid}")
        if oid in seen:
            raise ValueError(f"conflicting lifespans for object {oid}")
        seen.add(oid)
        if not (0 <= first <= last <= cfg.n_frames - 1):
            raise ValueError(f"lifespan ({first}, {last}) outside sequence for object {oid}")
        spans[oid] = (first, last)
    return spans


def _occlusion_frames(cfg: SimConfig, spans: dict[int, tuple[int, int]]) -> dict[int, set[int]]:
    hidden: dict[int, set[int]] = {}
    for id_a, id_b, start, duration in cfg.occlusion_events:
        for oid in (id_a, id_b):
            if oid not in spans:
                raise ValueError(f"occlusion references unknown object {oid}")
        end = start + duration  # exclusive
        for oid in (id_a, id_b):
            first, last = spans[oid]
            if not (first <= start and end - 1 <= last):
                raise ValueError(
                    f"occlusion window [{start}, {end}) outside lifespan of object {oid}"
                )
        hidden.setdefault(id_a, set()).update(range(start, end))
    return hidden


def simulate(cfg: SimConfig) -> SequenceGT:
    """Generate ground truth for one synthetic sequence, deterministic per seed."""
    spans = _lifespans(cfg)
    hidden = _occlusion_frames(cfg, spans)
    rng = np.random.default_rng(cfg.seed)
    seq = SequenceGT()

    for oid in range(cfg.n_objects):
        w = float(rng.uniform(cfg.size_min, cfg.size_max))
        h = float(rng.uniform(cfg.size_min, cfg.size_max))
        x0 = float(rng.uniform(w / 2, cfg.image_w - w / 2))
        y0 = float(rng.uniform(h / 2, cfg.image_h - h / 2))
        speed = float(rng.uniform(cfg.speed_min, cfg.speed_max))
        angle = float(rng.uniform(0, 2 * math.pi))
        vx, vy = speed * math.cos(angle), speed * math.sin(angle)
        # sinusoidal motion parameters (drawn for every object to keep the
        # stream layout identical across motion models)
        amp = float(rng.uniform(10.0, 60.0))
        period = float(rng.uniform(20.0, 60.0))
        phase = float(rng.uniform(0, 2 * math.pi))

        first, last = spans[oid]
        for frame in range(first, last + 1):
            k = frame - first
            cx = x0 + vx * k
            if cfg.motion == "linear":
                cy = y0 + vy * k
            else:
                cy = y0 + amp * math.sin(2 * math.pi * k / period + phase)
            cx = _fold(cx, w / 2, cfg.image_w - w / 2)
            cy = _fold(cy, h / 2, cfg.image_h - h / 2)
            visible = frame not in hidden.get(oid, ())
            seq.add(frame, oid, Box(cx, cy, w, h), visible=visible)
    return seq
