"""Track lifecycle and the four-stage association cascade.

Detections arrive as scored two-frame pairs, so the primary association
(stage 1) compares a detection's previous-frame box against the track's
last known box: both live in the same frame and no motion model is needed.
The Kalman filter earns its keep on lost tracks, whose predicted boxes are
matched against current-frame boxes to recover identities after occlusion.

Cascade reading (the residue flow admits several; this one is implemented):
  stage 1  activated tracks <-> high-confidence prior-slot detections
           (prev-frame IoU); high-confidence new-slot detections then get
           a second assignment against the still-unmatched activated
           tracks (slot provenance is a hint, not ground truth: the
           repeated prior box is corrupted at full noise, so the surviving
           detection of a tracked object regularly carries a new slot).
           True duplicates cannot reach this point, paired NMS already
           suppressed everything overlapping a kept detection;
  stage 2  lost tracks <-> all remaining high detections (predicted-box
           IoU at the current frame) -> re-activation under the old id;
  stage 3  still-unmatched activated tracks <-> low-confidence detections
           (both slot classes); tracks unmatched after this go lost;
  stage 4  unactivated tracks <-> remaining high detections; leftover high
           new detections spawn unactivated tracks; unmatched unactivated
           tracks are removed. Low-confidence leftovers never spawn tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoiser import Denoiser, FrameContext
from .geometry import Box, PairedDetection, boxes_to_array, iou, pairwise_iou
from .kalman import KalmanParams, KalmanState, kalman_initiate, kalman_predict, kalman_update
from .metrics import hungarian
from .sampler import SamplerConfig, run_inference
from .sequences import SequenceGT, SequenceResult

ACTIVATED = "activated"
UNACTIVATED = "unactivated"
LOST = "lost"
REMOVED = "removed"


@dataclass(frozen=True)
class AssocConfig:
    tau_conf: float = 0.4  # association-score gate on raw scores
    tau_track: float = 0.6  # high/low split on stretched scores
    low_floor: float = 0.1  # scores at or below this are dropped entirely
    n_lost: int = 30  # frames a lost track survives
    iou_gate: float = 0.3  # minimum IoU for any association
    use_stretch: bool = True
    stretch_base: float = 1.01

    def __post_init__(self) -> None:
        if not (0 < self.tau_conf < 1 and 0 < self.tau_track < 1):
            raise ValueError("thresholds must be in (0,1)")
        if not self.low_floor < self.tau_track:
            raise ValueError("low_floor must be below tau_track")


def stretch(s: float, base: float = 1.01) -> float:
    """Raw logarithmic stretch of one score (monotone increasing)."""
    s = max(s, 1e-7)
    return math.log(s) / math.log(base)


def stretch_batch(scores: np.ndarray, base: float = 1.01) -> np.ndarray:
    """Stretch then min-max rescale a score batch into [0, 1].

    Rank order is preserved; a constant batch rescales to all ones so that
    uniformly confident detections classify as high confidence.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        return scores.copy()
    raw = np.array([stretch(float(s), base) for s in scores])
    lo, hi = raw.min(), raw.max()
    if hi - lo < 1e-12:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


class Track:
    def __init__(self, track_id: int, kf: KalmanState, det: PairedDetection, frame: int, state: str):
        self.id = track_id
        self.kf = kf
        self.last_det = det
        self.last_box = det.boxes.cur  # box at the last updated frame
        self.predicted_box = det.boxes.cur  # refreshed by the time update
        self.score = det.combined_score
        self.state = state
        self.frames_since_update = 0
        self.age = 0
        self.first_frame = frame
        self.last_frame = frame


def _iou_assign(
    track_boxes: list[Box], det_boxes: list[Box], gate: float
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Optimal IoU assignment with a hard gate.

    Returns (matches, unmatched track indices, unmatched det indices).
    """
    if not track_boxes or not det_boxes:
        return [], list(range(len(track_boxes))), list(range(len(det_boxes)))
    overlap = pairwise_iou(boxes_to_array(track_boxes), boxes_to_array(det_boxes))
    cost = np.where(overlap >= gate, 1.0 - overlap, np.inf)
    matches = hungarian(cost)
    mt = {t for t, _ in matches}
    md = {d for _, d in matches}
    return (
        matches,
        [i for i in range(len(track_boxes)) if i not in mt],
        [i for i in range(len(det_boxes)) if i not in md],
    )


class PairTracker:
    """Stateful multi-object tracker over a stream of paired detections."""

    def __init__(self, cfg: AssocConfig = AssocConfig(), kf_params: KalmanParams = KalmanParams()):
        self.cfg = cfg
        self.kf_params = kf_params
        self.tracks: list[Track] = []
        self.removed: list[Track] = []
        self._next_id = 1

    def _new_track(self, det: PairedDetection, frame: int, state: str) -> Track:
        t = Track(
            self._next_id,
            kalman_initiate(det.boxes.cur, self.kf_params),
            det,
            frame,
            state,
        )
        self._next_id += 1  # removed ids are never reused
        self.tracks.append(t)
        return t

    def _update_track(self, t: Track, det: PairedDetection, frame: int) -> None:
        t.kf = kalman_update(t.kf, det.boxes.cur, self.kf_params)
        t.last_det = det
        t.last_box = det.boxes.cur
        t.score = det.combined_score
        t.state = ACTIVATED
        t.frames_since_update = 0
        t.last_frame = frame

    def _pool(self, state: str) -> list[Track]:
        return [t for t in self.tracks if t.state == state]

    def associate(
        self,
        dets: list[PairedDetection],
        frame_cur: int,
        n_a: int,
        bootstrap: bool = False,
    ) -> list[Track]:
        """Run the cascade for one frame; returns tracks updated this frame.

        n_a is the prior-derived proposal slot count: detections with slot
        below it originate from repeated prior boxes. bootstrap activates
        new tracks immediately (first frame pair of a sequence).
        """
        cfg = self.cfg

        # time update for every live track; ages everyone by one frame
        for t in self.tracks:
            t.age += 1
            t.frames_since_update += 1
            t.kf, t.predicted_box = kalman_predict(t.kf, self.kf_params)

        # confidence gate on raw association scores
        gated = [d for d in dets if d.assoc_score > cfg.tau_conf]

        # stretched-score partition into high / low
        scores = np.array([d.combined_score for d in gated])
        eff = stretch_batch(scores, cfg.stretch_base) if cfg.use_stretch else scores
        high = [d for d, s in zip(gated, eff) if s > cfg.tau_track]
        low = [d for d, s in zip(gated, eff) if cfg.low_floor < s < cfg.tau_track]
        high_prior = [d for d in high if 0 <= d.slot < n_a]
        high_new = [d for d in high if not (0 <= d.slot < n_a)]

        updated: list[Track] = []

        # stage 1: activated tracks vs high prior detections at the previous frame
        act = self._pool(ACTIVATED)
        m1, um_t1, um_d1 = _iou_assign(
            [t.last_box for t in act], [d.boxes.prev for d in high_prior], cfg.iou_gate
        )
        for ti, di in m1:
            self._update_track(act[ti], high_prior[di], frame_cur)
            updated.append(act[ti])
        # slot provenance is lossy (priors are corrupted at full noise), so
        # still-unmatched activated tracks get a pass over the high new pool
        rem_act = [act[i] for i in um_t1]
        m1b, um_t1b, um_d1b = _iou_assign(
            [t.last_box for t in rem_act], [d.boxes.prev for d in high_new], cfg.iou_gate
        )
        for ti, di in m1b:
            self._update_track(rem_act[ti], high_new[di], frame_cur)
            updated.append(rem_act[ti])
        rem_act = [rem_act[i] for i in um_t1b]
        hn_rest = [high_new[i] for i in um_d1b]

        # stage 2: lost tracks vs all remaining high detections at the current
        # frame; a refound object's detection may sit in either slot class
        lost = self._pool(LOST)
        rem_high = [(high_prior[i], False) for i in um_d1] + [(d, True) for d in hn_rest]
        m2, _, um_d2 = _iou_assign(
            [t.predicted_box for t in lost], [d.boxes.cur for d, _ in rem_high], cfg.iou_gate
        )
        for ti, di in m2:
            self._update_track(lost[ti], rem_high[di][0], frame_cur)  # refind: same id
            updated.append(lost[ti])
        rem_high = [rem_high[i] for i in um_d2]

        # stage 3: remaining activated tracks vs low detections, both slot classes
        m3, um_t3, _ = _iou_assign(
            [t.last_box for t in rem_act], [d.boxes.prev for d in low], cfg.iou_gate
        )
        for ti, di in m3:
            self._update_track(rem_act[ti], low[di], frame_cur)
            updated.append(rem_act[ti])
        for i in um_t3:
            rem_act[i].state = LOST  # low leftovers are discarded, never tracks

        # stage 4: unactivated tracks vs remaining high detections
        unact = self._pool(UNACTIVATED)
        m4, um_t4, um_d4 = _iou_assign(
            [t.predicted_box for t in unact], [d.boxes.cur for d, _ in rem_high], cfg.iou_gate
        )
        for ti, di in m4:
            self._update_track(unact[ti], rem_high[di][0], frame_cur)  # confirmed
            updated.append(unact[ti])
        for i in um_t4:
            unact[i].state = REMOVED
        # leftover high new detections become tracks; prior leftovers do not
        for di in um_d4:
            d, is_new = rem_high[di]
            if is_new:
                t = self._new_track(d, frame_cur, ACTIVATED if bootstrap else UNACTIVATED)
                if bootstrap:
                    updated.append(t)

        # lost-track retirement
        for t in self._pool(LOST):
            if t.frames_since_update > cfg.n_lost:
                t.state = REMOVED
        self.removed.extend(t for t in self.tracks if t.state == REMOVED)
        self.tracks = [t for t in self.tracks if t.state != REMOVED]

        return updated


def track_sequence(
    scene: SequenceGT,
    denoiser: Denoiser,
    sampler_cfg: SamplerConfig,
    assoc_cfg: AssocConfig = AssocConfig(),
    kf_params: KalmanParams = KalmanParams(),
    image_w: float = 1440.0,
    image_h: float = 800.0,
) -> SequenceResult:
    """Track a whole sequence: per-pair inference plus association.

    Prior boxes for each pair are the currently activated tracks' boxes. A
    single-frame sequence degenerates to detection on the pair (k, k).
    """
    result = SequenceResult()
    frames = scene.frames
    if not frames:
        return result
    tracker = PairTracker(assoc_cfg, kf_params)

    if len(frames) == 1:
        k = frames[0]
        ctx = FrameContext(k, k, image_w, image_h, scene)
        rng = np.random.default_rng(np.random.SeedSequence((sampler_cfg.rng_seed, 0)))
        dets = run_inference(ctx, [], denoiser, sampler_cfg, rng)
        gated = [d for d in dets if d.assoc_score > assoc_cfg.tau_conf]
        eff = stretch_batch(np.array([d.combined_score for d in gated]), assoc_cfg.stretch_base)
        for i, (d, s) in enumerate(zip(gated, eff)):
            if s > assoc_cfg.tau_track:
                result.add(k, i + 1, d.boxes.cur, d.combined_score)
        return result

    for step, (f_prev, f_cur) in enumerate(zip(frames[:-1], frames[1:])):
        ctx = FrameContext(f_prev, f_cur, image_w, image_h, scene)
        rng = np.random.default_rng(np.random.SeedSequence((sampler_cfg.rng_seed, step)))
        prior = [t.last_box for t in tracker.tracks if t.state == ACTIVATED]
        n_a = min(sampler_cfg.n_rp * len(prior), sampler_cfg.n_p)
        dets = run_inference(ctx, prior, denoiser, sampler_cfg, rng)

        first = step == 0
        updated = tracker.associate(dets, f_cur, n_a, bootstrap=first)
        if first:
            # the first pair also yields the first frame's boxes: each new
            # track spans both frames via its detection's prev box
            for t in updated:
                result.add(f_prev, t.id, t.last_det.boxes.prev, t.score)
        for t in updated:
            result.add(f_cur, t.id, t.last_box, t.score)
    return result
