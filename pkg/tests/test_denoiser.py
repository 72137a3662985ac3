"""The GT-driven oracle behind the prediction-head interface."""

import numpy as np
import pytest

from pairtrack.denoiser import FrameContext, OracleConfig, OracleDenoiser
from pairtrack.geometry import Box
from pairtrack.schedule import (
    NoiseSchedule,
    consistency_apply,
    denormalize_array,
    input_scale,
    normalize_array,
    sigma_at,
)
from pairtrack.sequences import SequenceGT

W, H = 1440.0, 800.0


def _ctx(scene):
    return FrameContext(0, 1, W, H, scene)


def _gt_signal(scene, sched):
    pairs = np.stack([p.to_array() for _, p in scene.visible_pairs(0, 1)])
    return normalize_array(pairs, W, H, sched)


def _oracle(sched, **kw):
    return OracleDenoiser(OracleConfig(**kw), sched)


class TestContracts:
    def test_frame_order_enforced(self):
        with pytest.raises(ValueError):
            FrameContext(5, 4, W, H)

    def test_shape_rejected(self, sched, three_object_scene):
        den = _oracle(sched)
        with pytest.raises(ValueError):
            den.predict(_ctx(three_object_scene), np.zeros((4, 7)), 1.0)

    def test_empty_proposals(self, sched, three_object_scene):
        pred = _oracle(sched).predict(_ctx(three_object_scene), np.zeros((0, 8)), 1.0)
        assert pred.boxes.shape == (0, 8)
        assert pred.cls_scores.shape == (0,)

    def test_scene_required(self, sched):
        with pytest.raises(ValueError):
            _oracle(sched).predict(FrameContext(0, 1, W, H), np.zeros((2, 8)), 1.0)

    def test_no_visible_objects_passthrough(self, sched, rng):
        scene = SequenceGT()
        scene.add(0, 1, Box(100, 100, 50, 50), visible=False)
        scene.add(1, 1, Box(100, 100, 50, 50), visible=False)
        noisy = rng.normal(size=(5, 8))
        pred = _oracle(sched).predict(_ctx(scene), noisy, 1.0)
        np.testing.assert_array_equal(pred.boxes, noisy)
        assert pred.cls_scores.max() == 0.0
        assert pred.assoc_scores.max() == 0.0


class TestFixedPoint:
    """A proposal lying exactly on a GT pair decodes back onto it with unit
    scores at every noise level."""

    @pytest.mark.parametrize("t", [0, 10, 25, 39])
    def test_decodes_onto_gt(self, sched, three_object_scene, t):
        ctx = _ctx(three_object_scene)
        sig = sigma_at(t, sched)
        clean = _gt_signal(three_object_scene, sched)
        noisy = input_scale(sig, sched) * clean
        pred = _oracle(sched).predict(ctx, noisy, sig)
        decoded = consistency_apply(noisy, pred.boxes, sig, sched)
        decoded_px = denormalize_array(decoded, W, H, sched)
        gt_px = np.stack([p.to_array() for _, p in three_object_scene.visible_pairs(0, 1)])
        np.testing.assert_allclose(decoded_px, gt_px, atol=1e-6)
        np.testing.assert_array_equal(pred.cls_scores, np.ones(3))
        np.testing.assert_array_equal(pred.assoc_scores, np.ones(3))

    def test_raw_equals_target_at_sigma_min(self, sched, three_object_scene):
        # the c_out = 0 branch returns the snapped target itself
        ctx = _ctx(three_object_scene)
        clean = _gt_signal(three_object_scene, sched)
        pred = _oracle(sched).predict(ctx, clean, sched.sigma_min)
        gt_px = np.stack([p.to_array() for _, p in three_object_scene.visible_pairs(0, 1)])
        np.testing.assert_allclose(
            denormalize_array(pred.boxes, W, H, sched), gt_px, atol=1e-9
        )

    def test_single_object_attracts_everything(self, sched, rng):
        scene = SequenceGT()
        scene.add(0, 3, Box(400, 300, 90, 70))
        scene.add(1, 3, Box(404, 300, 90, 70))
        ctx = _ctx(scene)
        sig = sigma_at(20, sched)
        noisy = rng.normal(scale=0.4, size=(50, 8))
        pred = _oracle(sched).predict(ctx, noisy, sig)
        decoded_px = denormalize_array(
            consistency_apply(noisy, pred.boxes, sig, sched), W, H, sched
        )
        want = scene.visible_pairs(0, 1)[0][1].to_array()
        np.testing.assert_allclose(decoded_px, np.tile(want, (50, 1)), atol=1e-6)


class TestDeterminism:
    def test_repeat_call_identical(self, sched, three_object_scene, rng):
        ctx = _ctx(three_object_scene)
        noisy = rng.normal(size=(30, 8))
        den = _oracle(sched, center_noise=6.0, size_noise=0.1)
        a = den.predict(ctx, noisy, 2.5)
        b = den.predict(ctx, noisy, 2.5)
        np.testing.assert_array_equal(a.boxes, b.boxes)
        np.testing.assert_array_equal(a.cls_scores, b.cls_scores)
        np.testing.assert_array_equal(a.assoc_scores, b.assoc_scores)

    def test_seed_changes_draws(self, sched, three_object_scene, rng):
        ctx = _ctx(three_object_scene)
        noisy = rng.normal(size=(30, 8))
        a = _oracle(sched, center_noise=6.0, seed=0).predict(ctx, noisy, 2.5)
        b = _oracle(sched, center_noise=6.0, seed=1).predict(ctx, noisy, 2.5)
        assert not np.array_equal(a.boxes, b.boxes)

    def test_sigma_changes_draws(self, sched, three_object_scene, rng):
        # distinct sampling steps must not replay the same jitter
        ctx = _ctx(three_object_scene)
        noisy = rng.normal(size=(30, 8))
        den = _oracle(sched, center_noise=6.0)
        a = den.predict(ctx, noisy, 2.5)
        b = den.predict(ctx, noisy, 5.0)
        da = denormalize_array(a.boxes, W, H, sched)
        db = denormalize_array(b.boxes, W, H, sched)
        assert not np.allclose(da, db)


class TestErrorModel:
    def test_center_noise_statistics(self, sched):
        # one object, proposals sitting on it, sigma_min so raw = target
        scene = SequenceGT()
        scene.add(0, 0, Box(700, 400, 100, 80))
        scene.add(1, 0, Box(703, 400, 100, 80))
        ctx = _ctx(scene)
        n = 10_000
        clean = np.tile(_gt_signal(scene, sched)[0], (n, 1))
        den = _oracle(sched, center_noise=8.0)
        pred = den.predict(ctx, clean, sched.sigma_min)
        px = denormalize_array(pred.boxes, W, H, sched)
        gt = scene.visible_pairs(0, 1)[0][1].to_array()
        err = px[:, [0, 1, 4, 5]] - gt[[0, 1, 4, 5]]
        assert np.std(err) == pytest.approx(8.0, rel=0.10)
        assert pred.cls_scores.max() < 1.0

    def test_noisy_scores_follow_overlap(self, sched, three_object_scene):
        ctx = _ctx(three_object_scene)
        clean = _gt_signal(three_object_scene, sched)
        den = _oracle(sched, center_noise=12.0, score_sharpness=2.0)
        pred = den.predict(ctx, clean, sched.sigma_min)
        assert np.all(pred.cls_scores > 0) and np.all(pred.cls_scores < 1)

    def test_false_positive_pairs_score_low(self, sched, three_object_scene):
        ctx = _ctx(three_object_scene)
        clean = _gt_signal(three_object_scene, sched)
        den = _oracle(sched, false_positive_rate=1.0)
        pred = den.predict(ctx, clean, sched.sigma_min)
        assert np.all(pred.assoc_scores < 0.2)
        # cls confidence is untouched, only the pairing is wrong
        np.testing.assert_array_equal(pred.cls_scores, np.ones(3))

    def test_zero_rate_keeps_assoc_equal_cls(self, sched, three_object_scene, rng):
        ctx = _ctx(three_object_scene)
        den = _oracle(sched, center_noise=5.0)
        pred = den.predict(ctx, rng.normal(size=(20, 8)), sched.sigma_min)
        np.testing.assert_array_equal(pred.assoc_scores, pred.cls_scores)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(center_noise=-1)
        with pytest.raises(ValueError):
            OracleConfig(false_positive_rate=1.5)


class TestSelfConsistency:
    """One decode maps any proposal set onto a subset of GT pairs.

    At sigma_min itself the skip composition is the identity on the input
    (the boundary condition), so the nontrivial round trip runs at levels
    above the boundary where the solved raw output steers the decode.
    """

    @pytest.mark.parametrize("t", [0, 20, 38])
    def test_round_trip_maps_onto_gt_subset(self, sched, three_object_scene, rng, t):
        ctx = _ctx(three_object_scene)
        sig = sigma_at(t, sched)
        noisy = rng.normal(scale=0.5, size=(200, 8))
        pred = _oracle(sched).predict(ctx, noisy, sig)
        decoded_px = denormalize_array(
            consistency_apply(noisy, pred.boxes, sig, sched), W, H, sched
        )
        gt_px = np.stack([p.to_array() for _, p in three_object_scene.visible_pairs(0, 1)])
        dist = np.abs(decoded_px[:, None, :] - gt_px[None, :, :]).max(axis=2)
        assert dist.min(axis=1).max() < 1e-9

    def test_clean_input_is_fixed_at_boundary(self, sched, three_object_scene):
        # at sigma_min the identity composition keeps clean proposals on GT
        ctx = _ctx(three_object_scene)
        clean = _gt_signal(three_object_scene, sched)
        pred = _oracle(sched).predict(ctx, clean, sched.sigma_min)
        out = consistency_apply(clean, pred.boxes, sched.sigma_min, sched)
        np.testing.assert_array_equal(out, clean)
