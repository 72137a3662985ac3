"""GT padding, set matching, the focal/L1/GIoU stack, and the two-timestep
training loss."""

import itertools
import math

import numpy as np
import pytest

from pairtrack.denoiser import FrameContext, OracleConfig, OracleDenoiser
from pairtrack.geometry import Box, PairedBox, PairedDetection, pairwise_giou3d
from pairtrack.losses import (
    GTPair,
    LossWeights,
    consistency_training_loss,
    focal_loss,
    match_predictions,
    pad_gt,
    total_loss,
)
from pairtrack.schedule import normalize_array
from pairtrack.sequences import SequenceGT

W, H = 1440.0, 800.0


def _pair(cx, cy, w, h, dx=0.0):
    return PairedBox(Box(cx, cy, w, h), Box(cx + dx, cy, w, h))


def _det(pb, cls=1.0, assoc=1.0):
    return PairedDetection(boxes=pb, cls_score=cls, assoc_score=assoc)


def _rand_pair(rng):
    cx, cy = rng.uniform(80, W - 80), rng.uniform(80, H - 80)
    w, h = rng.uniform(20, 150), rng.uniform(20, 150)
    return _pair(cx, cy, w, h, dx=rng.uniform(-5, 5))


class TestPadGt:
    def test_exact_count_is_noop(self, rng):
        gt = [GTPair(i, _pair(200 + 100 * i, 300, 50, 40)) for i in range(4)]
        assert pad_gt(gt, 4, rng) == gt

    def test_padding_fills_and_flags(self, rng):
        gt = [GTPair(i, _pair(200 + 150 * i, 300, 60, 40)) for i in range(5)]
        out = pad_gt(gt, 500, rng)
        assert len(out) == 500
        assert out[:5] == gt
        pads = out[5:]
        assert all(p.is_padding and p.identity == -1 for p in pads)
        for p in pads:
            assert p.boxes.prev.w > 0 and p.boxes.cur.h > 0

    def test_empty_scene_pads_uniform(self, rng):
        out = pad_gt([], 64, rng, image_w=W, image_h=H)
        assert len(out) == 64
        for p in out:
            assert p.is_padding
            for b in (p.boxes.prev, p.boxes.cur):
                assert 0 <= b.cx <= W and 0 <= b.cy <= H
                assert 0.02 * W <= b.w <= 0.3 * W
                assert 0.02 * H <= b.h <= 0.3 * H

    def test_subsample_warns_and_preserves_order(self, rng):
        gt = [GTPair(i, _pair(200 + 100 * i, 300, 50, 40)) for i in range(6)]
        with pytest.warns(UserWarning, match="subsampling"):
            out = pad_gt(gt, 3, rng)
        assert len(out) == 3
        kept = [g.identity for g in out]
        assert kept == sorted(kept)
        assert all(g in gt for g in out)


class TestFocalLoss:
    def test_pinned_positive_half(self):
        expected = 0.25 * 0.25 * math.log(2.0)
        assert focal_loss(0.5, True) == pytest.approx(expected, rel=1e-12)

    def test_pinned_negative_half(self):
        expected = 0.75 * 0.25 * math.log(2.0)
        assert focal_loss(0.5, False) == pytest.approx(expected, rel=1e-12)

    def test_confident_positive_vanishes(self):
        assert focal_loss(1.0, True) < 1e-20

    def test_confident_wrong_negative_is_clamped(self):
        # p clamps to 1 - 1e-7; the p**gamma modulation stays in the product
        expected = -0.75 * (1 - 1e-7) ** 2 * math.log(1e-7)
        assert focal_loss(1.0, False) == pytest.approx(expected, rel=1e-9)

    def test_easy_negative_small(self):
        assert focal_loss(0.01, False) < focal_loss(0.5, False) < focal_loss(0.99, False)


class TestTotalLoss:
    def test_exact_predictions_floor(self):
        w = LossWeights()
        gt = [GTPair(i, _pair(200 + 200 * i, 300, 60, 50, dx=4)) for i in range(3)]
        preds = [_det(g.boxes) for g in gt]
        br = total_loss(preds, gt, w, W, H)
        assert br.l1_term == 0.0
        assert br.giou3d_term == 0.0
        assert br.cls_term < 1e-12
        assert br.n_matched == 3 and br.n_negative == 0
        assert br.total == br.cls_term + br.l1_term + br.giou3d_term

    def test_l1_linear_in_center_shift(self):
        w = LossWeights()
        gt = [GTPair(0, _pair(400, 300, 80, 60))]
        for delta in (9.0, 18.0, 36.0):
            shifted = _pair(400 + delta, 300, 80, 60)
            br = total_loss([_det(shifted)], gt, w, W, H)
            # both halves shift one coordinate; signal slope is 2/W per px
            assert br.l1_term == pytest.approx(w.lambda_l1 * 2 * (2 * delta / W), rel=1e-12)

    def test_disjoint_pair_giou_penalty(self):
        # same-size boxes 15 px apart with a 5 px gap: hull 25x10, union 200,
        # so the paired generalized overlap is exactly -0.2
        w = LossWeights()
        gt = [GTPair(0, _pair(5, 5, 10, 10))]
        br = total_loss([_det(_pair(20, 5, 10, 10))], gt, w, W, H)
        assert br.giou3d_term == pytest.approx(w.lambda_giou3d * 1.2, rel=1e-12)
        assert br.l1_term == pytest.approx(w.lambda_l1 * 2 * (2 * 15 / W), rel=1e-12)

    def test_empty_gt_all_negative(self):
        w = LossWeights()
        preds = [_det(_pair(400, 300, 80, 60), cls=0.5) for _ in range(4)]
        br = total_loss(preds, [], w, W, H)
        assert br.n_matched == 0 and br.n_negative == 4
        assert br.l1_term == 0.0 and br.giou3d_term == 0.0
        assert br.cls_term == pytest.approx(w.lambda_cls * 4 * focal_loss(0.5, False), rel=1e-12)

    def test_empty_preds(self):
        br = total_loss([], [GTPair(0, _pair(400, 300, 80, 60))], LossWeights(), W, H)
        assert br.total == 0.0 and br.n_matched == 0 and br.n_negative == 0

    def test_prediction_on_padding_stays_negative(self):
        w = LossWeights()
        pad_pair = _pair(1000, 600, 50, 50)
        gt = [
            GTPair(0, _pair(200, 200, 60, 60)),
            GTPair(-1, pad_pair, is_padding=True),
        ]
        br = total_loss([_det(pad_pair, cls=1.0)], gt, w, W, H)
        # perfect overlap with padding earns no box terms, only the negative
        assert br.n_matched == 0 and br.n_negative == 1
        assert br.l1_term == 0.0 and br.giou3d_term == 0.0
        assert br.cls_term == pytest.approx(w.lambda_cls * focal_loss(1.0, False), rel=1e-9)

    def test_order_invariance(self, rng):
        w = LossWeights()
        gt = [GTPair(i, _rand_pair(rng)) for i in range(6)]
        preds = [_det(_rand_pair(rng), cls=rng.uniform(0.2, 1.0)) for _ in range(6)]
        base = total_loss(preds, gt, w, W, H).total
        order_p = rng.permutation(6)
        order_g = rng.permutation(6)
        shuffled = total_loss(
            [preds[i] for i in order_p], [gt[i] for i in order_g], w, W, H
        ).total
        assert shuffled == pytest.approx(base, rel=1e-9)


def _cost_matrix(preds, gts, w, sched=None):
    from pairtrack.schedule import NoiseSchedule

    sched = sched or NoiseSchedule()
    p_px = np.stack([p.boxes.to_array() for p in preds])
    g_px = np.stack([g.boxes.to_array() for g in gts])
    p_sig = normalize_array(p_px, W, H, sched)
    g_sig = normalize_array(g_px, W, H, sched)
    cls = np.array([p.cls_score for p in preds])
    l1 = np.abs(p_sig[:, None, :] - g_sig[None, :, :]).sum(axis=-1)
    giou = pairwise_giou3d(p_px, g_px)
    return w.lambda_cls * (1 - cls)[:, None] + w.lambda_l1 * l1 + w.lambda_giou3d * (1 - giou)


def _brute_min_cost(cost):
    n_p, n_g = cost.shape
    k = min(n_p, n_g)
    best = math.inf
    if n_p <= n_g:
        for perm in itertools.permutations(range(n_g), k):
            best = min(best, sum(cost[i, perm[i]] for i in range(k)))
    else:
        for perm in itertools.permutations(range(n_p), k):
            best = min(best, sum(cost[perm[j], j] for j in range(k)))
    return best


class TestMatching:
    def test_identity_layout(self):
        w = LossWeights()
        gt = [GTPair(i, _pair(200 + 250 * i, 300, 60, 50)) for i in range(4)]
        preds = [_det(g.boxes) for g in gt]
        assert sorted(match_predictions(preds, gt, w, W, H)) == [(i, i) for i in range(4)]

    def test_empty_inputs(self):
        w = LossWeights()
        assert match_predictions([], [GTPair(0, _pair(200, 200, 50, 50))], w, W, H) == []
        assert match_predictions([_det(_pair(200, 200, 50, 50))], [], w, W, H) == []

    def test_optimal_against_enumeration(self):
        w = LossWeights()
        rng = np.random.default_rng(42)
        for _ in range(200):
            n_p = int(rng.integers(1, 5))
            n_g = int(rng.integers(1, 5))
            preds = [_det(_rand_pair(rng), cls=rng.uniform()) for _ in range(n_p)]
            gts = [GTPair(i, _rand_pair(rng)) for i in range(n_g)]
            cost = _cost_matrix(preds, gts, w)
            got = match_predictions(preds, gts, w, W, H)
            assert len(got) == min(n_p, n_g)
            assert len({r for r, _ in got}) == len(got)
            assert len({c for _, c in got}) == len(got)
            total = sum(cost[r, c] for r, c in got)
            assert total == pytest.approx(_brute_min_cost(cost), abs=1e-9)


def _training_scene(n_objects=3):
    gt = SequenceGT()
    for i in range(n_objects):
        cx, cy = 220 + 330 * i, 280 + 90 * i
        for frame in (0, 1):
            gt.add(frame, i, Box(cx + 5 * frame, cy, 90, 70))
    return gt


class TestConsistencyTrainingLoss:
    def _setup(self, sched, n_train=100, **oracle_kw):
        scene = _training_scene()
        ctx = FrameContext(0, 1, W, H, scene)
        real = [GTPair(i, pb) for i, pb in scene.visible_pairs(0, 1)]
        padded = pad_gt(real, n_train, np.random.default_rng(11), W, H)
        den = OracleDenoiser(OracleConfig(**oracle_kw), sched)
        return ctx, padded, den

    @pytest.mark.parametrize("t_r", [1, 10, 20, 39])
    def test_box_terms_vanish_on_exact_trajectory(self, sched, t_r):
        ctx, padded, den = self._setup(sched)
        eps = np.zeros((len(padded), 8))
        total, lo, hi = consistency_training_loss(
            ctx, padded, t_r, eps, den, LossWeights(), sched
        )
        for br in (lo, hi):
            assert br.l1_term < 1e-9
            assert br.giou3d_term < 1e-9
            assert br.n_matched == 3
        assert total == pytest.approx(lo.total + hi.total, rel=1e-12)

    def test_gt_order_symmetry(self, sched):
        ctx, padded, den = self._setup(sched)
        eps = np.zeros((len(padded), 8))
        base = consistency_training_loss(ctx, padded, 20, eps, den, LossWeights(), sched)[0]
        rev = list(reversed(padded))
        swapped = consistency_training_loss(ctx, rev, 20, eps, den, LossWeights(), sched)[0]
        assert swapped == pytest.approx(base, rel=1e-9)

    def test_box_terms_grow_with_oracle_noise(self, sched):
        # the classification term moves the other way (noise makes the
        # padding negatives less confident, hence cheaper), so monotonicity
        # is a box-term property
        box_terms = []
        for noise in (0.0, 2.0, 8.0):
            ctx, padded, den = self._setup(sched, n_train=50, center_noise=noise)
            eps = np.zeros((len(padded), 8))
            _, lo, hi = consistency_training_loss(
                ctx, padded, 20, eps, den, LossWeights(), sched
            )
            box_terms.append(lo.l1_term + lo.giou3d_term + hi.l1_term + hi.giou3d_term)
        assert box_terms[0] < box_terms[1] < box_terms[2]

    def test_step_zero_rejected(self, sched):
        ctx, padded, den = self._setup(sched, n_train=10)
        eps = np.zeros((10, 8))
        with pytest.raises(ValueError):
            consistency_training_loss(ctx, padded, 0, eps, den, LossWeights(), sched)
        with pytest.raises(ValueError):
            consistency_training_loss(ctx, padded, 40, eps, den, LossWeights(), sched)

    def test_eps_shape_checked(self, sched):
        ctx, padded, den = self._setup(sched, n_train=10)
        with pytest.raises(ValueError):
            consistency_training_loss(
                ctx, padded, 5, np.zeros((3, 8)), den, LossWeights(), sched
            )
