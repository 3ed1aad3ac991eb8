import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nocspose.camera import (
    CameraIntrinsics,
    Pose,
    axis_angle_to_matrix,
    orthonormalize,
    project,
    quaternion_to_matrix,
    random_rotation,
    rotation_error_deg,
)
from nocspose.errors import BehindCameraError


def test_project_optical_axis(cam):
    np.testing.assert_allclose(project([0, 0, 1000], Pose.identity(), cam), [320, 240])


def test_project_offset(cam):
    np.testing.assert_allclose(project([100, 0, 1000], Pose.identity(), cam), [370, 240])


def test_project_behind(cam):
    with pytest.raises(BehindCameraError):
        project([0, 0, -10], Pose.identity(), cam)


def test_project_batch_matches_matrix_form(cam, rng):
    pose = Pose(random_rotation(rng), [5, -3, 800])
    pts = rng.normal(size=(20, 3)) * 50
    cam_pts = pts @ pose.rotation.T + pose.translation
    h = cam_pts @ cam.K.T
    np.testing.assert_allclose(project(pts, pose, cam), h[:, :2] / h[:, 2:], rtol=1e-12)


def test_pose_validation():
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, -1.0]), [0, 0, 0])
    with pytest.raises(ValueError):
        Pose(np.eye(3), [0, 0, np.nan])


def test_pose_algebra(rng):
    a = Pose(random_rotation(rng), rng.normal(size=3))
    b = Pose(random_rotation(rng), rng.normal(size=3))
    p = rng.normal(size=(5, 3))
    np.testing.assert_allclose(a.compose(b).transform(p), a.transform(b.transform(p)), atol=1e-12)
    np.testing.assert_allclose(a.inverse().transform(a.transform(p)), p, atol=1e-12)
    np.testing.assert_allclose(Pose.from_matrix(a.matrix()).matrix(), a.matrix())
    back = Pose.from_dict(a.to_dict())
    np.testing.assert_array_equal(back.rotation, a.rotation)
    np.testing.assert_array_equal(back.translation, a.translation)


def test_intrinsics_roundtrip_and_diagonal(cam):
    assert CameraIntrinsics.from_dict(cam.to_dict()) == cam
    assert cam.diagonal == 800.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_rotation_is_proper(seed):
    R = random_rotation(np.random.default_rng(seed))
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_random_rotation_uniform_angle_distribution():
    # For Haar-uniform rotations the angle has density (1 - cos t) / pi.
    rng = np.random.default_rng(0)
    angles = np.radians([rotation_error_deg(np.eye(3), random_rotation(rng)) for _ in range(20000)])
    assert np.mean(angles) == pytest.approx(np.pi / 2 + 2 / np.pi, abs=0.02)


def test_rotation_helpers():
    R = axis_angle_to_matrix([0, 0, 1], np.radians(30))
    assert rotation_error_deg(np.eye(3), R) == pytest.approx(30.0)
    q = [np.cos(np.radians(15)), 0, 0, np.sin(np.radians(15))]
    np.testing.assert_allclose(quaternion_to_matrix(q), R, atol=1e-12)
    noisy = R + 1e-3 * np.random.default_rng(1).normal(size=(3, 3))
    Q = orthonormalize(noisy)
    np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-12)
    assert rotation_error_deg(Q, R) < 0.2
