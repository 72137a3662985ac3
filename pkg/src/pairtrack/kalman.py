"""Constant-velocity Kalman filter over center-form boxes.

State is (cx, cy, w, h, vcx, vcy, vw, vh). Noise scales are proportional to
box height, the usual convention for pedestrian-scale tracking. Updates use
the Joseph form so the covariance stays symmetric PSD even with zero noise
(the exactness tests run the filter with all noise switched off).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box

_NDIM = 4


@dataclass(frozen=True)
class KalmanParams:
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160


@dataclass
class KalmanState:
    mean: np.ndarray  # (8,)
    covariance: np.ndarray  # (8, 8)

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        if self.mean.shape != (8,) or self.covariance.shape != (8, 8):
            raise ValueError("mean must be (8,), covariance (8, 8)")

    def box(self) -> Box:
        cx, cy, w, h = self.mean[:4]
        return Box(float(cx), float(cy), float(max(w, 1e-6)), float(max(h, 1e-6)))


def _motion_matrix() -> np.ndarray:
    f = np.eye(2 * _NDIM)
    for i in range(_NDIM):
        f[i, _NDIM + i] = 1.0
    return f


_F = _motion_matrix()
_H = np.eye(_NDIM, 2 * _NDIM)


def kalman_initiate(z: Box, params: KalmanParams = KalmanParams()) -> KalmanState:
    """Start a track from one measurement with zero velocity."""
    mean = np.array([z.cx, z.cy, z.w, z.h, 0, 0, 0, 0], dtype=np.float64)
    wp, wv = params.std_weight_position, params.std_weight_velocity
    std = np.array([2 * wp * z.h] * 4 + [10 * wv * z.h] * 4)
    return KalmanState(mean, np.diag(std**2))


def kalman_predict(
    kf: KalmanState, params: KalmanParams = KalmanParams()
) -> tuple[KalmanState, Box]:
    """Constant-velocity time update; returns the new state and its box."""
    wp, wv = params.std_weight_position, params.std_weight_velocity
    h = kf.mean[3]
    std = np.array([wp * h] * 4 + [wv * h] * 4)
    q = np.diag(std**2)
    mean = _F @ kf.mean
    cov = _F @ kf.covariance @ _F.T + q
    state = KalmanState(mean, cov)
    return state, state.box()


def kalman_update(
    kf: KalmanState, z: Box, params: KalmanParams = KalmanParams()
) -> KalmanState:
    """Measurement update on (cx, cy, w, h).

    Joseph-form covariance update; a singular innovation covariance (all
    noise off, fully converged state) falls back to a zero gain, which is
    exact when the innovation is zero and surfaced as an error otherwise.
    """
    wp = params.std_weight_position
    r = np.diag(np.array([wp * kf.mean[3]] * 4) ** 2)
    zv = np.array([z.cx, z.cy, z.w, z.h], dtype=np.float64)

    s = _H @ kf.covariance @ _H.T + r
    pht = kf.covariance @ _H.T
    innovation = zv - _H @ kf.mean
    try:
        gain = np.linalg.solve(s, pht.T).T
    except np.linalg.LinAlgError:
        if np.allclose(innovation, 0.0, atol=1e-9):
            gain = np.zeros((2 * _NDIM, _NDIM))
        else:
            raise ValueError("singular innovation covariance with nonzero innovation")

    mean = kf.mean + gain @ innovation
    ikh = np.eye(2 * _NDIM) - gain @ _H
    cov = ikh @ kf.covariance @ ikh.T + gain @ r @ gain.T
    cov = (cov + cov.T) / 2.0

    if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
        raise ValueError("non-finite filter state after update")
    if np.any(np.diag(cov) < -1e-9):
        raise ValueError("covariance lost positive semidefiniteness")
    if mean[2] <= 0 or mean[3] <= 0:
        # measurement boxes are positive by type; a negative filtered size
        # means the state collapsed, clamp to the measurement
        mean[2] = max(mean[2], 1e-6 * zv[2])
        mean[3] = max(mean[3], 1e-6 * zv[3])
    return KalmanState(mean, cov)
