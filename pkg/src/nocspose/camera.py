"""Pinhole camera, rigid poses and rotation utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError

MIN_DEPTH = 1e-6  # mm


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def diagonal(self):
        return float(np.hypot(self.width, self.height))

    def to_dict(self):
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], d["width"], d["height"])


# Linemod / LM-O test camera, used as the default for generated datasets.
LMO_INTRINSICS = CameraIntrinsics(572.4114, 573.57043, 325.2611, 242.04899, 640, 480)


class Pose:
    """Rigid transform x_cam = R @ x_model + t (translation in mm)."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation, atol=1e-6):
        R = np.array(rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(translation, dtype=np.float64).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=atol) or abs(np.linalg.det(R) - 1.0) > atol:
            raise ValueError("rotation must be orthonormal with det +1")
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        R.setflags(write=False)
        t.setflags(write=False)
        self.rotation = R
        self.translation = t

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=np.float64)
        return cls(T[:3, :3], T[:3, 3])

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def transform(self, points):
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def compose(self, other: "Pose | np.ndarray") -> "Pose":
        """self ∘ other (apply ``other`` first)."""
        M = other.matrix() if isinstance(other, Pose) else np.asarray(other, dtype=np.float64)
        return Pose.from_matrix(self.matrix() @ M)

    def inverse(self):
        return Pose(self.rotation.T, -self.rotation.T @ self.translation)

    def to_dict(self):
        return {"rotation": self.rotation.reshape(-1).tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["rotation"]).reshape(3, 3), d["translation"])

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def project(p, pose: Pose, k: CameraIntrinsics):
    """Project model point(s) (mm) to pixel coordinates.

    Raises BehindCameraError if any point has camera z <= 1e-6 mm.
    """
    p = np.asarray(p, dtype=np.float64)
    cam = pose.transform(p)
    z = cam[..., 2]
    if np.any(z <= MIN_DEPTH):
        raise BehindCameraError("point is at or behind the camera plane")
    return np.stack([k.fx * cam[..., 0] / z + k.cx, k.fy * cam[..., 1] / z + k.cy], axis=-1)


def project_camera_points(cam, k: CameraIntrinsics):
    """Project camera-frame points without the depth check; z <= 0 gives inf."""
    cam = np.asarray(cam, dtype=np.float64)
    z = cam[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(z > MIN_DEPTH, k.fx * cam[..., 0] / z + k.cx, np.inf)
        v = np.where(z > MIN_DEPTH, k.fy * cam[..., 1] / z + k.cy, np.inf)
    return np.stack([u, v], axis=-1)


# ---------------------------------------------------------------------------
# Rotations


def axis_angle_to_matrix(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    K = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def quaternion_to_matrix(q):
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_rotation(rng: np.random.Generator):
    """Uniformly distributed rotation (Shoemake's quaternion method)."""
    u1, u2, u3 = rng.random(3)
    q = np.array(
        [
            np.sqrt(u1) * np.cos(2 * np.pi * u3),
            np.sqrt(1 - u1) * np.sin(2 * np.pi * u2),
            np.sqrt(1 - u1) * np.cos(2 * np.pi * u2),
            np.sqrt(u1) * np.sin(2 * np.pi * u3),
        ]
    )
    return quaternion_to_matrix(q)


def rotation_error_deg(R_a, R_b):
    """Geodesic angle between two rotations, degrees."""
    c = (np.trace(np.asarray(R_a).T @ np.asarray(R_b)) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def orthonormalize(R):
    """Nearest proper rotation in the Frobenius sense."""
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt
