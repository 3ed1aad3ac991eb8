"""Pose and correspondence-map quality metrics.

ADD(-S) follows the average-distance definition: the non-symmetric branch
pairs each model point with itself, the symmetric branch with the nearest
model point under the estimated pose. MSSD/MSPD take the minimum over the
object's symmetry transforms of the maximum per-point 3D / projected error.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .camera import CameraIntrinsics, Pose, project_camera_points
from .mesh import ModelInfo

ADD_RECALL_FRACTION = 0.1
MSSD_THRESHOLDS = np.arange(1, 11) * 0.05  # fractions of the diameter
MSPD_THRESHOLDS = np.arange(1, 11) * 5.0  # multiples of diagonal / 1000


def _points(points):
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty model point set")
    return pts


def _syms(symmetries):
    syms = [np.asarray(s, dtype=np.float64) for s in symmetries] if symmetries is not None else []
    return syms or [np.eye(4)]


def _is_identity_only(symmetries):
    syms = _syms(symmetries)
    return all(np.allclose(s, np.eye(4)) for s in syms)


def add_metric(gt: Pose, est: Pose, points, symmetries=None) -> float:
    """Average model-point distance between two poses (mm).

    With only the identity symmetry each point is compared with itself;
    otherwise each ground-truth-posed point is compared with its nearest
    estimated-posed model point (exact nearest neighbour via a k-d tree).
    """
    pts = _points(points)
    p_gt = gt.transform(pts)
    p_est = est.transform(pts)
    if _is_identity_only(symmetries):
        return float(np.mean(np.linalg.norm(p_gt - p_est, axis=1)))
    dist, _ = cKDTree(p_est).query(p_gt, k=1)
    return float(np.mean(dist))


def add_recall(add: float, info: ModelInfo, k_m: float = ADD_RECALL_FRACTION) -> bool:
    """True iff ``add <= k_m * diameter`` (non-strict)."""
    if add < 0:
        raise ValueError("ADD must be non-negative")
    return bool(add <= k_m * info.diameter)


def mse(est, gt) -> float:
    """Mean of squared differences over every pixel and channel ([0, 1] valued)."""
    a = np.asarray(est, dtype=np.float64)
    b = np.asarray(gt, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def iou(est_mask, gt_mask) -> float:
    a = np.asarray(est_mask, dtype=bool)
    b = np.asarray(gt_mask, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def _sym_gt_poses(gt: Pose, symmetries):
    return [gt.matrix() @ S for S in _syms(symmetries)]


def mssd(gt: Pose, est: Pose, points, symmetries=None) -> float:
    """min over symmetries S of max over x of ||gt(S x) - est(x)|| (mm)."""
    pts = _points(points)
    p_est = est.transform(pts)
    best = np.inf
    for T in _sym_gt_poses(gt, symmetries):
        p_gt = pts @ T[:3, :3].T + T[:3, 3]
        best = min(best, float(np.max(np.linalg.norm(p_gt - p_est, axis=1))))
    return best


def mspd(gt: Pose, est: Pose, points, symmetries, k: CameraIntrinsics) -> float:
    """Projected counterpart of :func:`mssd` (pixels)."""
    pts = _points(points)
    uv_est = project_camera_points(est.transform(pts), k)
    best = np.inf
    for T in _sym_gt_poses(gt, symmetries):
        uv_gt = project_camera_points(pts @ T[:3, :3].T + T[:3, 3], k)
        with np.errstate(invalid="ignore"):
            d = np.linalg.norm(uv_gt - uv_est, axis=1)
        d = np.where(np.isnan(d), np.inf, d)
        best = min(best, float(np.max(d)))
    return best


def recall_curve(errors, thresholds):
    """Fraction of errors strictly below each threshold."""
    e = np.asarray(errors, dtype=np.float64).reshape(-1, 1)
    e = np.where(np.isnan(e), np.inf, e)
    return np.mean(e < np.asarray(thresholds, dtype=np.float64).reshape(1, -1), axis=0)


def average_recall_star(mssd_values, mspd_values, info: ModelInfo, k: CameraIntrinsics) -> float:
    """Mean of the MSSD and MSPD average recalls (no VSD term; labeled AR*).

    Failed estimates should be passed as ``inf``.
    """
    mssd_values = np.asarray(list(mssd_values), dtype=np.float64)
    mspd_values = np.asarray(list(mspd_values), dtype=np.float64)
    if mssd_values.size == 0 or mspd_values.size == 0:
        raise ValueError("need at least one MSSD and one MSPD value")
    return ar_star_normalized(mssd_values / info.diameter, mspd_values / (k.diagonal / 1000.0))


def ar_star_normalized(mssd_rel, mspd_rel) -> float:
    """AR* from errors already divided by the diameter (MSSD) and by diagonal/1000 (MSPD)."""
    ar_mssd = float(np.mean(recall_curve(mssd_rel, MSSD_THRESHOLDS)))
    ar_mspd = float(np.mean(recall_curve(mspd_rel, MSPD_THRESHOLDS)))
    return (ar_mssd + ar_mspd) / 2.0


@dataclass
class MetricReport:
    add_mm: float
    add_pass: bool
    mse: float
    iou: float
    mssd_mm: float
    mspd_px: float

    FIELDS = ("add_mm", "add_pass", "mse", "iou", "mssd_mm", "mspd_px")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)

    def to_csv_row(self, header=False):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.FIELDS)
        w.writerow([_fmt(getattr(self, f)) for f in self.FIELDS])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return repr(float(v))


def evaluate(gt: Pose, est: Pose, info: ModelInfo, points, k: CameraIntrinsics,
             est_coords=None, gt_coords=None, est_mask=None, gt_mask=None) -> MetricReport:
    """All metrics for one estimate; map terms are NaN when maps are not given."""
    add = add_metric(gt, est, points, info.symmetries)
    return MetricReport(
        add_mm=add,
        add_pass=add_recall(add, info),
        mse=mse(est_coords, gt_coords) if est_coords is not None else float("nan"),
        iou=iou(est_mask, gt_mask) if est_mask is not None else float("nan"),
        mssd_mm=mssd(gt, est, points, info.symmetries),
        mspd_px=mspd(gt, est, points, info.symmetries, k),
    )
