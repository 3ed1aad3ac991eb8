import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nocspose.camera import Pose, random_rotation
from nocspose.mesh import ModelInfo
from nocspose.metrics import (
    ADD_RECALL_FRACTION,
    MetricReport,
    add_metric,
    add_recall,
    average_recall_star,
    evaluate,
    iou,
    mse,
    mspd,
    mssd,
)


def random_instance(rng, n_max=50, sym_max=4):
    n = int(rng.integers(1, n_max + 1))
    pts = rng.normal(size=(n, 3)) * 40
    gt = Pose(random_rotation(rng), [*rng.uniform(-50, 50, 2), rng.uniform(400, 900)])
    est = Pose(random_rotation(rng) if rng.random() < 0.5 else gt.rotation,
               gt.translation + rng.normal(size=3) * 10)
    syms = [np.eye(4)]
    for _ in range(int(rng.integers(0, sym_max))):
        S = np.eye(4)
        S[:3, :3] = random_rotation(rng)
        syms.append(S)
    return pts, gt, est, syms


class TestAdd:
    def test_zero(self, rng):
        pts = rng.normal(size=(30, 3))
        p = Pose(random_rotation(rng), [0, 0, 500])
        assert add_metric(p, p, pts) == 0.0
        assert add_metric(p, p, pts, [np.eye(4), np.diag([-1.0, -1, 1, 1])]) == 0.0

    def test_pure_offset(self, rng):
        pts = rng.normal(size=(30, 3)) * 50
        gt = Pose(random_rotation(rng), [0, 0, 500])
        est = Pose(gt.rotation, gt.translation + [3, 0, 0])
        assert add_metric(gt, est, pts) == pytest.approx(3.0, abs=1e-12)

    def test_symmetric_twenty_points(self):
        rng = np.random.default_rng(20)
        pts = rng.normal(size=(20, 3)) * 30
        gt = Pose(random_rotation(rng), [0, 0, 500])
        est = Pose(random_rotation(rng), [2, 1, 505])
        syms = [np.eye(4), np.diag([-1.0, -1, 1, 1])]
        want = oracles.add_sym(gt.matrix(), est.matrix(), pts.tolist())
        assert abs(add_metric(gt, est, pts, syms) - want) <= 1e-9

    def test_symmetric_never_exceeds_plain(self, rng):
        pts, gt, est, _ = random_instance(rng)
        syms = [np.eye(4), np.diag([1.0, -1, -1, 1])]
        assert add_metric(gt, est, pts, syms) <= add_metric(gt, est, pts) + 1e-12


class TestRecall:
    @pytest.mark.parametrize("frac,expected", [(0.09, True), (0.11, False), (0.1, True)])
    def test_threshold(self, frac, expected):
        info = ModelInfo(150.0)
        assert add_recall(frac * 150.0, info) is expected

    def test_constant(self):
        assert ADD_RECALL_FRACTION == 0.1

    def test_negative(self):
        with pytest.raises(ValueError):
            add_recall(-1.0, ModelInfo(1.0))


class TestMapScores:
    def test_mse_examples(self):
        a = np.random.default_rng(0).random((5, 5, 3))
        assert mse(a, a) == 0.0
        assert mse(np.full((4, 4, 3), 0.75), np.full((4, 4, 3), 0.25)) == 0.25
        assert mse(np.array([[0.1], [0.3]]), np.zeros((2, 1))) == pytest.approx(0.05, abs=1e-15)

    def test_iou_examples(self):
        full = np.ones((4, 6), bool)
        left = full.copy()
        left[:, 3:] = False
        assert iou(full, full) == 1.0
        assert iou(left, ~left) == 0.0
        assert iou(left, full) == 0.5
        assert iou(np.zeros((3, 3)), np.zeros((3, 3))) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ValueError):
            iou(np.zeros((2, 2)), np.zeros((2, 3)))


class TestSymmetryAware:
    def test_identity_case(self, rng, cam):
        pts, gt, _, syms = random_instance(rng)
        assert mssd(gt, gt, pts, syms) == 0.0
        assert mspd(gt, gt, pts, syms, cam) == 0.0

    def test_est_is_symmetric_copy(self, rng, cam):
        pts, gt, _, syms = random_instance(rng, sym_max=4)
        S = syms[-1]
        est = Pose.from_matrix(gt.matrix() @ S)
        assert mssd(gt, est, pts, syms) < 1e-9
        assert mspd(gt, est, pts, syms, cam) < 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_against_double_loop(self, cam, seed):
        pts, gt, est, syms = random_instance(np.random.default_rng(seed))
        G, E = gt.matrix(), est.matrix()
        assert abs(mssd(gt, est, pts, syms) - oracles.mssd(G, E, pts.tolist(), syms)) <= 1e-9
        assert abs(mspd(gt, est, pts, syms, cam) - oracles.mspd(G, E, pts.tolist(), syms, cam)) <= 1e-9

    def test_mspd_behind_camera_is_inf(self, cam):
        pts = np.array([[0.0, 0, 0], [10, 0, 0]])
        gt = Pose(np.eye(3), [0, 0, 500])
        est = Pose(np.eye(3), [0, 0, -500])
        assert mspd(gt, est, pts, None, cam) == math.inf


class TestArStar:
    def test_all_zero(self, cam):
        assert average_recall_star([0, 0], [0, 0], ModelInfo(100.0), cam) == 1.0

    def test_all_above(self, cam):
        assert average_recall_star([51.0], [1e6], ModelInfo(100.0), cam) == 0.0

    def test_hand_evaluated(self, cam):
        assert average_recall_star([26.0], [0.0], ModelInfo(100.0), cam) == pytest.approx(0.75)

    def test_failures_count_as_misses(self, cam):
        assert average_recall_star([0.0, math.inf], [0.0, math.inf], ModelInfo(100.0), cam) == 0.5


def test_evaluate_and_report(rng, cam):
    pts, gt, est, _ = random_instance(rng)
    info = ModelInfo(120.0)
    r = evaluate(gt, est, info, pts, cam)
    assert r.add_mm == add_metric(gt, est, pts)
    assert math.isnan(r.mse) and math.isnan(r.iou)
    assert r.to_csv_row(header=True).splitlines()[0] == ",".join(MetricReport.FIELDS)
    assert '"add_pass"' in r.to_json()


class TestMetricInvariants:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6))
    def test_symmetric_copy_invariance(self, cam, seed, order):
        # Cyclic symmetry group about z and a point set closed under it.
        rng = np.random.default_rng(seed)
        syms = []
        for i in range(order):
            a = 2 * np.pi * i / order
            S = np.eye(4)
            S[:2, :2] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
            syms.append(S)
        base = rng.normal(size=(8, 3)) * 40
        pts = np.vstack([base @ S[:3, :3].T for S in syms])
        gt = Pose(random_rotation(rng), [*rng.uniform(-50, 50, 2), rng.uniform(400, 900)])
        est = Pose(random_rotation(rng), gt.translation + rng.normal(size=3) * 10)
        for S in syms[1:]:
            est_s = Pose.from_matrix(est.matrix() @ S)
            assert mssd(gt, est_s, pts, syms) == pytest.approx(mssd(gt, est, pts, syms), abs=1e-9)
            assert mspd(gt, est_s, pts, syms, cam) == pytest.approx(mspd(gt, est, pts, syms, cam), abs=1e-9)
            assert add_metric(gt, est_s, pts, syms) == pytest.approx(add_metric(gt, est, pts, syms), abs=1e-9)

    def test_symmetric_branch_invariant_for_closed_point_sets(self, rng):
        # With a point set closed under S, ADD-S cannot tell est from est o S.
        base = rng.normal(size=(15, 3)) * 30
        S = np.diag([-1.0, -1.0, 1.0, 1.0])
        pts = np.vstack([base, base @ S[:3, :3].T])
        gt = Pose(random_rotation(rng), [0, 0, 600])
        est = Pose(random_rotation(rng), [3, 2, 610])
        est_s = Pose.from_matrix(est.matrix() @ S)
        assert add_metric(gt, est_s, pts, [np.eye(4), S]) == pytest.approx(add_metric(gt, est, pts, [np.eye(4), S]),
                                                                         abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_argument_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.random((6, 7, 3)), rng.random((6, 7, 3))
        ma, mb = rng.random((6, 7)) > 0.5, rng.random((6, 7)) > 0.5
        assert mse(a, b) == mse(b, a)
        assert iou(ma, mb) == iou(mb, ma)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_same_rotation_is_translation_gap(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(25, 3)) * 50
        R = random_rotation(rng)
        gt, est = Pose(R, rng.normal(size=3) * 100), Pose(R, rng.normal(size=3) * 100)
        assert add_metric(gt, est, pts) == pytest.approx(np.linalg.norm(gt.translation - est.translation), rel=1e-12)
