import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nocspose.camera import Pose, project, random_rotation, rotation_error_deg
from nocspose.crop import CropInfo, Roi, crop_roi
from nocspose.errors import DegenerateConfigurationError, InsufficientDataError, NoConsensusError
from nocspose.pnp import (
    Correspondence2D3D,
    CorrespondenceSet,
    RansacParams,
    _required_iterations,
    epnp,
    extract_correspondences,
    ransac_pnp,
    reprojection_error,
    reprojection_errors,
)
from nocspose.render import CorrespondenceMap, render_nocs_map

from helpers import random_pose, tilted_pose


def synth(pose, pts, k):
    return CorrespondenceSet(project(pts, pose, k), pts)


def pose_errors(a, b):
    return rotation_error_deg(a.rotation, b.rotation), float(np.linalg.norm(a.translation - b.translation))


class TestEpnp:
    def test_eight_points_identity_rotation(self, cam, rng):
        pts = rng.uniform(-60, 60, size=(8, 3))
        gt = Pose(np.eye(3), [0, 0, 500])
        r, t = pose_errors(epnp(synth(gt, pts, cam), cam), gt)
        assert r < 0.01 and t < 0.1

    def test_planar_fallback(self, cam, rng):
        pts = np.c_[rng.uniform(-60, 60, size=(12, 2)), np.full(12, 7.0)]
        gt = tilted_pose(z=700)
        r, t = pose_errors(epnp(synth(gt, pts, cam), cam), gt)
        assert r < 0.1 and t < 1.0

    def test_three_points(self, cam):
        with pytest.raises(InsufficientDataError):
            epnp(synth(Pose(np.eye(3), [0, 0, 500]), np.eye(3) * 10, cam), cam)

    def test_collinear(self, cam):
        pts = np.outer(np.arange(6), [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateConfigurationError):
            epnp(synth(Pose(np.eye(3), [0, 0, 500]), pts, cam), cam)

    def test_accepts_correspondence_list(self, cam, rng):
        pts = rng.uniform(-50, 50, size=(6, 3))
        gt = tilted_pose()
        uv = project(pts, gt, cam)
        corrs = [Correspondence2D3D(tuple(p), tuple(q)) for p, q in zip(uv, pts)]
        assert pose_errors(epnp(corrs, cam), gt)[0] < 1e-6

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), n=st.integers(4, 40), planar=st.booleans())
    def test_noiseless_recovery(self, cam, seed, n, planar):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-60, 60, size=(n, 3))
        if planar:
            pts[:, 2] = 0.0
        gt = random_pose(rng)
        corrs = synth(gt, pts, cam)
        est = epnp(corrs, cam)
        assert reprojection_errors(corrs, est, cam).max() < 1e-3


class TestReprojection:
    def test_three_four_five(self, cam):
        pose = Pose(np.eye(3), [0, 0, 1000])
        uv = project([10, 20, 0], pose, cam)
        c = Correspondence2D3D((uv[0] + 3, uv[1] + 4), (10, 20, 0))
        assert reprojection_error(c, pose, cam) == pytest.approx(5.0, abs=1e-12)

    def test_behind_camera(self, cam):
        c = Correspondence2D3D((320, 240), (0, 0, -2000))
        assert reprojection_error(c, Pose(np.eye(3), [0, 0, 1000]), cam) == math.inf

    def test_rendered_gt(self, l_block_nocs, cam):
        pose = tilted_pose()
        m = render_nocs_map(l_block_nocs, pose, cam)
        corrs = extract_correspondences(m, CropInfo.identity(cam.width, cam.height), l_block_nocs.transform)
        assert reprojection_errors(corrs, pose, cam).max() <= 0.75


class TestExtract:
    def test_background(self, l_block_nocs):
        m = CorrespondenceMap.empty(16, 16)
        assert len(extract_correspondences(m, CropInfo.identity(16, 16), l_block_nocs.transform)) == 0

    def test_count_and_stride(self, l_block_nocs, cam):
        m = render_nocs_map(l_block_nocs, tilted_pose(), cam)
        info = CropInfo.identity(cam.width, cam.height)
        assert len(extract_correspondences(m, info, l_block_nocs.transform)) == m.mask.sum()
        assert len(extract_correspondences(m, info, l_block_nocs.transform, 3)) == m.mask[::3, ::3].sum()

    def test_crop_reprojects(self, l_block_nocs, cam):
        pose = tilted_pose()
        full = render_nocs_map(l_block_nocs, pose, cam)
        ys, xs = np.nonzero(full.mask)
        roi = Roi.around_box((xs.min(), ys.min(), xs.max() - xs.min() + 1, ys.max() - ys.min() + 1))
        crop, info = crop_roi(full, roi)
        corrs = extract_correspondences(crop, info, l_block_nocs.transform)
        assert len(corrs) == crop.mask.sum() > 0
        assert reprojection_errors(corrs, pose, cam).max() <= 0.75


class TestRansac:
    def test_noiseless_all_inliers(self, cam, rng):
        pts = rng.uniform(-60, 60, size=(100, 3))
        gt = random_pose(rng)
        est = ransac_pnp(synth(gt, pts, cam), cam, RansacParams(seed=3))
        assert est.num_inliers == 100
        r, t = pose_errors(est.pose, gt)
        assert r < 0.01 and t < 0.1

    def test_deterministic(self, cam, rng):
        pts = rng.uniform(-60, 60, size=(80, 3))
        uv = project(pts, tilted_pose(), cam)
        uv[:30] = rng.uniform(0, 480, size=(30, 2))
        a = ransac_pnp((uv, pts), cam, RansacParams(seed=11))
        b = ransac_pnp((uv, pts), cam, RansacParams(seed=11))
        assert a.to_json() == b.to_json()
        np.testing.assert_array_equal(a.inlier_indices, b.inlier_indices)

    def test_too_few(self, cam):
        with pytest.raises(InsufficientDataError):
            ransac_pnp((np.zeros((5, 2)), np.zeros((5, 3))), cam)

    def test_all_random_no_consensus(self, cam):
        rng = np.random.default_rng(5)
        with pytest.raises(NoConsensusError):
            ransac_pnp((rng.uniform(0, 480, (10, 2)), rng.uniform(-50, 50, (10, 3))), cam, RansacParams(seed=5))

    def test_required_iterations(self):
        assert _required_iterations(1.0, 0.99) == 0
        assert _required_iterations(0.0, 0.99) == math.inf
        assert _required_iterations(0.5, 0.99) == pytest.approx(math.log(0.01) / math.log(1 - 0.5**4))

    def test_params_validation(self):
        with pytest.raises(ValueError):
            RansacParams(min_inliers=3)
        with pytest.raises(ValueError):
            RansacParams(inlier_threshold=0)

    def test_estimate_serialization(self, cam, rng):
        pts = rng.uniform(-60, 60, size=(20, 3))
        est = ransac_pnp(synth(tilted_pose(), pts, cam), cam)
        d = est.to_dict()
        assert d["inlier_count"] == 20 and len(d["rotation"]) == 9


def test_rotation_equivariance_of_solution(cam):
    # Rotating the model frame must not change the recovered camera-frame geometry.
    rng = np.random.default_rng(9)
    pts = rng.uniform(-50, 50, size=(7, 3))
    gt = tilted_pose()
    Q = random_rotation(rng)
    uv = project(pts, gt, cam)
    a = epnp((uv, pts), cam)
    b = epnp((uv, pts @ Q.T), cam)
    np.testing.assert_allclose(a.transform(pts), b.transform(pts @ Q.T), atol=1e-6)


class TestInvariants:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_inlier_contract(self, cam, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-60, 60, size=(60, 3))
        uv = project(pts, random_pose(rng), cam) + rng.normal(size=(60, 2)) * 0.7
        uv[:15] = rng.uniform(0, 480, size=(15, 2))
        params = RansacParams(seed=seed)
        est = ransac_pnp((uv, pts), cam, params)
        err = reprojection_errors((uv, pts), est.pose, cam)
        assert np.all(err[est.inlier_indices] <= params.inlier_threshold)
        assert est.mean_inlier_reprojection_error == pytest.approx(err[est.inlier_indices].mean())

    @staticmethod
    def _check_frame_consistency(cam, seed, n, noise):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-60, 60, size=(n, 3))
        gt = random_pose(rng)
        uv = project(pts, gt, cam) + rng.normal(size=(n, 2)) * noise
        G = Pose(random_rotation(rng), rng.normal(size=3) * 100)
        a = epnp((uv, pts), cam)
        b = epnp((uv, G.transform(pts)), cam)
        expected = a.compose(G.inverse())
        np.testing.assert_allclose(b.rotation, expected.rotation, atol=1e-6)
        np.testing.assert_allclose(b.translation, expected.translation, atol=1e-6 * np.linalg.norm(a.translation))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 30))
    def test_frame_consistency_exact(self, cam, seed, n):
        self._check_frame_consistency(cam, seed, n, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(6, 40))
    def test_frame_consistency_noisy(self, cam, seed, n):
        # With 4 or 5 noisy points the EPnP null space is exactly 4- or 2-dimensional
        # and the beta solve depends on its (arbitrary) basis; from 6 points on it is unique.
        self._check_frame_consistency(cam, seed, n, 0.5)

    def test_quantization_budget(self, cam):
        # 8-bit maps of noiseless renders: within 1 deg and 2% of the distance.
        from nocspose.mapio import roundtrip_8bit
        from nocspose.mesh import normalize_to_nocs
        from nocspose.synthetic import make_l_block

        nocs = normalize_to_nocs(make_l_block())
        rng = np.random.default_rng(31)
        worst_r, worst_t = 0.0, 0.0
        for i in range(25):
            gt = random_pose(rng, z_range=(400, 1200))
            m = roundtrip_8bit(render_nocs_map(nocs, gt, cam))
            corrs = extract_correspondences(m, CropInfo.identity(cam.width, cam.height), nocs.transform, stride=2)
            r, t = pose_errors(ransac_pnp(corrs, cam, RansacParams(seed=i)).pose, gt)
            worst_r = max(worst_r, r)
            worst_t = max(worst_t, t / gt.translation[2])
        assert worst_r < 1.0 and worst_t < 0.02
