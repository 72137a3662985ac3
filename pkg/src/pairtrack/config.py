"""Plain-text key=value configuration with namespaced keys.

One key per line, `namespace.key=value`, `#` comments and blank lines
ignored. Unknown keys are rejected so typos fail loudly. Every key has a
documented default; `default_config_text()` renders them as a template.
"""

from __future__ import annotations

from pathlib import Path

from .denoiser import OracleConfig
from .kalman import KalmanParams
from .losses import LossWeights
from .sampler import SamplerConfig
from .schedule import NoiseSchedule
from .sim import SimConfig
from .tracker import AssocConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type constructor, default, help)
REGISTRY: dict[str, tuple] = {
    "schedule.T": (int, 40, "total timestep count"),
    "schedule.sigma_min": (float, 0.002, "lowest noise level"),
    "schedule.sigma_max": (float, 80.0, "highest noise level"),
    "schedule.rho": (float, 7.0, "sigma ramp curvature"),
    "schedule.sigma_data": (float, 0.5, "data scale constant"),
    "schedule.half_scale": (_bool, True, "apply the extra /2 input shrink in corruption"),
    "sampler.n_p": (int, 2000, "proposal count"),
    "sampler.n_ss": (int, 2, "sampling step count"),
    "sampler.n_rp": (int, 8, "prior box repeat count"),
    "sampler.b_th": (float, 0.6, "renewal score threshold (0 disables renewal)"),
    "sampler.n_th": (float, 0.5, "NMS overlap threshold"),
    "oracle.center_noise": (float, 0.0, "oracle center error std (px)"),
    "oracle.size_noise": (float, 0.0, "oracle relative size error std"),
    "oracle.score_sharpness": (float, 2.0, "score decay vs box error"),
    "oracle.false_positive_rate": (float, 0.0, "cross-identity pair rate"),
    "tracker.tau_conf": (float, 0.4, "association score gate"),
    "tracker.tau_track": (float, 0.6, "high/low confidence split"),
    "tracker.low_floor": (float, 0.1, "minimum usable score"),
    "tracker.n_lost": (int, 30, "frames a lost track survives"),
    "tracker.iou_gate": (float, 0.3, "minimum association IoU"),
    "tracker.use_stretch": (_bool, True, "stretch scores before partitioning"),
    "tracker.stretch_base": (float, 1.01, "logarithm base of the stretch"),
    "tracker.kalman_pos_weight": (float, 1.0 / 20, "position noise scale vs box height"),
    "tracker.kalman_vel_weight": (float, 1.0 / 160, "velocity noise scale vs box height"),
    "loss.lambda_cls": (float, 2.0, "classification term weight"),
    "loss.lambda_l1": (float, 5.0, "L1 box term weight"),
    "loss.lambda_giou3d": (float, 2.0, "paired GIoU term weight"),
    "loss.n_train": (int, 500, "padded GT population size"),
    "sim.image_w": (float, 1440.0, "canvas width (px)"),
    "sim.image_h": (float, 800.0, "canvas height (px)"),
    "sim.n_objects": (int, 8, "object count"),
    "sim.n_frames": (int, 100, "frame count"),
    "sim.speed_min": (float, 1.0, "minimum speed (px/frame)"),
    "sim.speed_max": (float, 6.0, "maximum speed (px/frame)"),
    "sim.size_min": (float, 40.0, "minimum box side (px)"),
    "sim.size_max": (float, 120.0, "maximum box side (px)"),
    "sim.motion": (str, "linear", "motion model: linear or sinusoidal"),
    "seed": (int, 0, "master random seed"),
}


def load_config(path: str | Path | None) -> dict:
    """Read a config file into a fully defaulted key -> value dict."""
    values = {k: default for k, (_, default, _) in REGISTRY.items()}
    if path is None:
        return values
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in REGISTRY:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            ctor = REGISTRY[key][0]
            try:
                values[key] = ctor(raw)
            except ValueError as e:
                raise ConfigError(f"{path}: line {lineno}: bad value for {key}: {e}") from None
    return values


def apply_overrides(values: dict, overrides: list[str]) -> dict:
    """Apply command-line `key=value` overrides on top of loaded values."""
    out = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in REGISTRY:
            raise ConfigError(f"override: unknown key {key!r}")
        try:
            out[key] = REGISTRY[key][0](raw.strip())
        except ValueError as e:
            raise ConfigError(f"override: bad value for {key}: {e}") from None
    return out


def default_config_text() -> str:
    # help rides on its own comment line; the loader takes values verbatim
    # and would choke on an inline comment
    lines = ["# pairtrack configuration (key=value, '#' comments)"]
    for key, (_, default, help_text) in REGISTRY.items():
        lines.append(f"# {help_text}")
        lines.append(f"{key}={default}")
    return "\n".join(lines) + "\n"


def make_schedule(v: dict) -> NoiseSchedule:
    return NoiseSchedule(
        T=v["schedule.T"],
        sigma_min=v["schedule.sigma_min"],
        sigma_max=v["schedule.sigma_max"],
        rho=v["schedule.rho"],
        sigma_data=v["schedule.sigma_data"],
        half_scale=v["schedule.half_scale"],
    )


def make_sampler_config(v: dict) -> SamplerConfig:
    return SamplerConfig(
        n_p=v["sampler.n_p"],
        n_ss=v["sampler.n_ss"],
        n_rp=v["sampler.n_rp"],
        b_th=v["sampler.b_th"],
        n_th=v["sampler.n_th"],
        sched=make_schedule(v),
        rng_seed=v["seed"],
    )


def make_oracle_config(v: dict) -> OracleConfig:
    return OracleConfig(
        center_noise=v["oracle.center_noise"],
        size_noise=v["oracle.size_noise"],
        score_sharpness=v["oracle.score_sharpness"],
        false_positive_rate=v["oracle.false_positive_rate"],
        seed=v["seed"],
    )


def make_assoc_config(v: dict) -> AssocConfig:
    return AssocConfig(
        tau_conf=v["tracker.tau_conf"],
        tau_track=v["tracker.tau_track"],
        low_floor=v["tracker.low_floor"],
        n_lost=v["tracker.n_lost"],
        iou_gate=v["tracker.iou_gate"],
        use_stretch=v["tracker.use_stretch"],
        stretch_base=v["tracker.stretch_base"],
    )


def make_kalman_params(v: dict) -> KalmanParams:
    return KalmanParams(
        std_weight_position=v["tracker.kalman_pos_weight"],
        std_weight_velocity=v["tracker.kalman_vel_weight"],
    )


def make_loss_weights(v: dict) -> LossWeights:
    return LossWeights(
        lambda_cls=v["loss.lambda_cls"],
        lambda_l1=v["loss.lambda_l1"],
        lambda_giou3d=v["loss.lambda_giou3d"],
    )


def make_sim_config(v: dict, seed: int | None = None) -> SimConfig:
    return SimConfig(
        image_w=v["sim.image_w"],
        image_h=v["sim.image_h"],
        n_objects=v["sim.n_objects"],
        n_frames=v["sim.n_frames"],
        speed_min=v["sim.speed_min"],
        speed_max=v["sim.speed_max"],
        size_min=v["sim.size_min"],
        size_max=v["sim.size_max"],
        motion=v["sim.motion"],
        seed=v["seed"] if seed is None else seed,
    )
