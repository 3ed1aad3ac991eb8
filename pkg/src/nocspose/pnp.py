"""2D-3D correspondence decoding and pose recovery with EPnP inside RANSAC.

EPnP expresses the model points as barycentric combinations of a few
control points, solves for the camera-frame control points as a
combination of the null-space vectors of a linear system, recovers the
combination weights from the rigidity (pairwise control-point distance)
constraints, and finally aligns model and camera points rigidly.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .camera import MIN_DEPTH, CameraIntrinsics, Pose
from .crop import CropInfo
from .errors import DegenerateConfigurationError, InsufficientDataError, NoConsensusError
from .mesh import NocsTransform, nocs_to_model
from .render import CorrespondenceMap

PLANAR_RATIO = 1e-6
COLLINEAR_RATIO = 1e-6
GAUSS_NEWTON_ITERS = 8


@dataclass(frozen=True)
class Correspondence2D3D:
    pixel: tuple[float, float]
    point: tuple[float, float, float]


class CorrespondenceSet:
    """Array-backed sequence of :class:`Correspondence2D3D`.

    ``pixels`` is (N, 2) in full-image pixel coordinates and ``points`` is
    (N, 3) in model millimeters.
    """

    __slots__ = ("pixels", "points")

    def __init__(self, pixels, points):
        px = np.array(pixels, dtype=np.float64).reshape(-1, 2)
        pt = np.array(points, dtype=np.float64).reshape(-1, 3)
        if len(px) != len(pt):
            raise ValueError(f"{len(px)} pixels but {len(pt)} points")
        px.setflags(write=False)
        pt.setflags(write=False)
        self.pixels = px
        self.points = pt

    @classmethod
    def coerce(cls, corrs):
        if isinstance(corrs, CorrespondenceSet):
            return corrs
        if isinstance(corrs, tuple) and len(corrs) == 2 and isinstance(corrs[0], np.ndarray):
            return cls(*corrs)
        corrs = list(corrs)
        return cls([c.pixel for c in corrs], [c.point for c in corrs])

    def __len__(self):
        return len(self.pixels)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return Correspondence2D3D(tuple(self.pixels[i].tolist()), tuple(self.points[i].tolist()))
        return CorrespondenceSet(self.pixels[i], self.points[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class RansacParams:
    max_iterations: int = 300
    inlier_threshold: float = 2.0
    min_inliers: int = 6
    confidence: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.inlier_threshold > 0:
            raise ValueError("inlier_threshold must be positive")
        if self.min_inliers < 4:
            raise ValueError("min_inliers must be >= 4")
        if not 0 < self.confidence <= 1:
            raise ValueError("confidence must be in (0, 1]")

    def to_dict(self):
        return {
            "max_iterations": self.max_iterations,
            "inlier_threshold": self.inlier_threshold,
            "min_inliers": self.min_inliers,
            "confidence": self.confidence,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    pose: Pose
    inlier_indices: np.ndarray
    mean_inlier_reprojection_error: float
    iterations: int = 0

    @property
    def num_inliers(self):
        return len(self.inlier_indices)

    def to_dict(self):
        return {
            "rotation": self.pose.rotation.reshape(-1).tolist(),
            "translation": self.pose.translation.tolist(),
            "inlier_count": int(self.num_inliers),
            "mean_reprojection_error": float(self.mean_inlier_reprojection_error),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# Decoding


def extract_correspondences(cmap: CorrespondenceMap, crop: CropInfo, t: NocsTransform, stride: int = 1):
    """Turn every valid pixel on the stride grid into a 2D-3D pair.

    Pixels are reported at the center of the full-image pixel each crop
    pixel was sampled from, in row-major order. An all-background map gives
    an empty set.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    sub = cmap.mask[::stride, ::stride]
    rows, cols = np.nonzero(sub)
    rows, cols = rows * stride, cols * stride
    u, v = crop.source_pixel_center(cols, rows)
    points = nocs_to_model(cmap.coords[rows, cols], t)
    return CorrespondenceSet(np.stack([u, v], axis=-1), points)


# ---------------------------------------------------------------------------
# EPnP


def _principal_axes(pts):
    c0 = pts.mean(axis=0)
    A = pts - c0
    evals, evecs = np.linalg.eigh(A.T @ A / len(pts))
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # Deterministic, rotation-equivariant axis signs: positive third moment,
    # falling back to the first point's side when the moment vanishes.
    for k in range(3):
        proj = A @ evecs[:, k]
        m3 = float(np.sum(proj**3))
        scale = float(np.sum(np.abs(proj) ** 3))
        s = m3 if abs(m3) > 1e-9 * scale else float(proj[0])
        if s < 0:
            evecs[:, k] = -evecs[:, k]
    return c0, np.sqrt(evals), evecs


def _control_points(pts):
    c0, extents, axes = _principal_axes(pts)
    if extents[0] == 0 or extents[1] <= COLLINEAR_RATIO * extents[0]:
        raise DegenerateConfigurationError("3D points are collinear or coincident")
    planar = extents[2] <= PLANAR_RATIO * extents[0]
    nax = 2 if planar else 3
    ctrl = np.vstack([c0] + [c0 + extents[k] * axes[:, k] for k in range(nax)])
    local = (pts - c0) @ axes[:, :nax] / extents[:nax]
    alphas = np.hstack([1.0 - local.sum(axis=1, keepdims=True), local])
    return ctrl, alphas


@functools.lru_cache(maxsize=None)
def _pairs(nc):
    ia, ib = zip(*itertools.combinations(range(nc), 2))
    return np.array(ia), np.array(ib)


@functools.lru_cache(maxsize=None)
def _monomials(N):
    return tuple((k, l) for k in range(N) for l in range(k, N))


@functools.lru_cache(maxsize=None)
def _quadratic_relations(N):
    """Index arrays (m1, m2, m3, m4): B[m1] * B[m2] == B[m3] * B[m4] for B = beta beta^T."""
    mons = _monomials(N)
    pos = {m: i for i, m in enumerate(mons)}
    rels = []
    for quad in itertools.combinations_with_replacement(range(N), 4):
        splits = set()
        for i, j in ((0, 1), (0, 2), (0, 3)):
            rest = [x for x in range(4) if x not in (i, j)]
            p = tuple(sorted((quad[i], quad[j])))
            q = tuple(sorted((quad[rest[0]], quad[rest[1]])))
            splits.add(tuple(sorted((pos[p], pos[q]))))
        splits = sorted(splits)
        for s1, s2 in zip(splits, splits[1:]):
            rels.append((*s1, *s2))
    return tuple(np.array(col) for col in zip(*rels))


def _kernel_diffs(kernel, ctrl_w, N):
    nc = len(ctrl_w)
    ia, ib = _pairs(nc)
    V = kernel[:, :N].T.reshape(N, nc, 3)
    dv = V[:, ia] - V[:, ib]  # (N, pairs, 3)
    target = np.sum((ctrl_w[ia] - ctrl_w[ib]) ** 2, axis=1)
    return dv, target


def _linearized_system(dv, N):
    """Rows: one per control point pair; columns: monomials beta_k * beta_l."""
    G = np.einsum("kpj,lpj->pkl", dv, dv)
    ks, ls = zip(*_monomials(N))
    ks, ls = np.array(ks), np.array(ls)
    return G[:, ks, ls] * np.where(ks == ls, 1.0, 2.0)


def _solve_monomials(L, rho, N):
    if L.shape[1] <= L.shape[0]:
        return np.linalg.lstsq(L, rho, rcond=None)[0]
    # Underdetermined: B = B0 + sum_i lam_i n_i, then enforce the quadratic
    # relations of a rank-one B (relinearization), linear in lam_i lam_j.
    U, s, Vt = np.linalg.svd(L)
    rank = int(np.sum(s > s[0] * 1e-12))
    B0 = Vt[:rank].T @ ((U[:, :rank].T @ rho) / s[:rank])
    null = Vt[rank:].T
    C = np.hstack([B0[:, None], null])  # B = C @ [1, lam]
    r = null.shape[1]
    m1, m2, m3, m4 = _quadratic_relations(N)
    P = np.einsum("ea,eb->eab", C[m1], C[m2]) - np.einsum("ea,eb->eab", C[m3], C[m4])
    P = P + P.transpose(0, 2, 1)
    lam_mons = _monomials(r + 1)
    a_idx = np.array([a for a, _ in lam_mons])
    b_idx = np.array([b for _, b in lam_mons])
    A = P[:, a_idx, b_idx] * np.where(a_idx == b_idx, 0.5, 1.0)
    # lam_mons[0] == (0, 0) is the constant term; lam_mons[1..r] are (0, i).
    sol = np.linalg.lstsq(A[:, 1:], -A[:, 0], rcond=None)[0]
    return B0 + null @ sol[:r]


def _betas_from_monomials(B, N):
    mons = _monomials(N)
    diag = np.array([B[mons.index((k, k))] for k in range(N)])
    k0 = int(np.argmax(np.abs(diag)))
    b0 = math.sqrt(abs(diag[k0]))
    if b0 == 0:
        return np.zeros(N)
    betas = np.empty(N)
    for k in range(N):
        betas[k] = b0 if k == k0 else B[mons.index((min(k, k0), max(k, k0)))] / b0
    return betas


def _gauss_newton(betas, dv, target):
    for _ in range(GAUSS_NEWTON_ITERS):
        d = np.einsum("k,kpj->pj", betas, dv)
        res = np.einsum("pj,pj->p", d, d) - target
        J = 2.0 * np.einsum("pj,kpj->pk", d, dv)
        try:
            step = np.linalg.solve(J.T @ J, -J.T @ res)
        except np.linalg.LinAlgError:
            break
        betas = betas + step
        if step @ step <= 1e-24 * (betas @ betas):
            break
    return betas


def _kabsch(src, dst):
    """R, t minimizing ||R @ src + t - dst|| (rows are points)."""
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    H = (src - cs).T @ (dst - cd)
    U, _, Vt = np.linalg.svd(H)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0])
    R = Vt.T @ D @ U.T
    return R, cd - R @ cs


def _reproj_errors(pts, uv, R, t, k: CameraIntrinsics):
    cam = pts @ R.T + t
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        du = k.fx * cam[:, 0] / z + k.cx - uv[:, 0]
        dv = k.fy * cam[:, 1] / z + k.cy - uv[:, 1]
        err = np.sqrt(du * du + dv * dv)
    err[~(z > MIN_DEPTH)] = np.inf
    return err


def _epnp(pts, uv, k: CameraIntrinsics):
    n = len(pts)
    ctrl_w, alphas = _control_points(pts)
    nc = len(ctrl_w)
    xn = (uv[:, 0] - k.cx) / k.fx
    yn = (uv[:, 1] - k.cy) / k.fy
    M = np.zeros((2 * n, 3 * nc))
    for j in range(nc):
        M[0::2, 3 * j] = alphas[:, j]
        M[0::2, 3 * j + 2] = -alphas[:, j] * xn
        M[1::2, 3 * j + 1] = alphas[:, j]
        M[1::2, 3 * j + 2] = -alphas[:, j] * yn
    _, kernel = np.linalg.eigh(M.T @ M)  # ascending eigenvalues

    # The exact null space of M has dimension 3 * nc - 2n when that is
    # positive; smaller N would pick an arbitrary slice of it.
    n_max = 4 if nc == 4 else 2
    n_min = min(max(1, 3 * nc - 2 * n), n_max)
    best = None
    for N in range(n_min, n_max + 1):
        dv, target = _kernel_diffs(kernel, ctrl_w, N)
        B = _solve_monomials(_linearized_system(dv, N), target, N)
        betas = _gauss_newton(_betas_from_monomials(B, N), dv, target)
        ctrl_c = (kernel[:, :N] @ betas).reshape(nc, 3)
        cam = alphas @ ctrl_c
        if np.mean(cam[:, 2]) < 0:
            cam = -cam
        R, t = _kabsch(pts, cam)
        err = float(np.mean(_reproj_errors(pts, uv, R, t, k)))
        if best is None or err < best[2]:
            best = (R, t, err)
    return best


def epnp(corrs, k: CameraIntrinsics) -> Pose:
    """Pose from at least 4 non-collinear 2D-3D correspondences.

    Handles planar point sets with three control points. Raises
    InsufficientDataError below 4 points and DegenerateConfigurationError
    for collinear points.
    """
    cs = CorrespondenceSet.coerce(corrs)
    if len(cs) < 4:
        raise InsufficientDataError(f"EPnP needs at least 4 correspondences, got {len(cs)}")
    R, t, _ = _epnp(cs.points, cs.pixels, k)
    return Pose(R, t)


def reprojection_error(c: Correspondence2D3D, pose: Pose, k: CameraIntrinsics) -> float:
    """Pixel distance between ``c.pixel`` and the projection of ``c.point``; inf behind the camera."""
    err = _reproj_errors(np.asarray(c.point, float).reshape(1, 3), np.asarray(c.pixel, float).reshape(1, 2),
                         pose.rotation, pose.translation, k)
    return float(err[0])


def reprojection_errors(corrs, pose: Pose, k: CameraIntrinsics):
    cs = CorrespondenceSet.coerce(corrs)
    return _reproj_errors(cs.points, cs.pixels, pose.rotation, pose.translation, k)


# ---------------------------------------------------------------------------
# RANSAC


def _required_iterations(inlier_ratio, confidence, sample_size=4):
    if inlier_ratio >= 1.0:
        return 0
    w = inlier_ratio**sample_size
    if w <= 0.0:
        return math.inf
    denom = math.log1p(-w)
    if denom == 0.0:
        return math.inf
    return math.log1p(-confidence) / denom if confidence < 1 else math.inf


def ransac_pnp(corrs, k: CameraIntrinsics, params: RansacParams = RansacParams()) -> PoseEstimate:
    """Hypothesize-and-verify EPnP.

    Each iteration draws 4 distinct correspondences from a generator seeded
    with ``params.seed``, solves EPnP and counts correspondences within
    ``inlier_threshold`` pixels. The best hypothesis (most inliers, then
    lowest mean inlier error, then earliest) is refit on its inliers.
    """
    cs = CorrespondenceSet.coerce(corrs)
    n = len(cs)
    if n < params.min_inliers:
        raise InsufficientDataError(f"{n} correspondences, need at least {params.min_inliers}")
    pts, uv = cs.points, cs.pixels
    thr = params.inlier_threshold
    rng = np.random.default_rng(params.seed)

    best_count, best_err, best = 0, math.inf, None
    needed = math.inf
    it = 0
    while it < min(params.max_iterations, needed):
        sample = rng.choice(n, size=4, replace=False)
        it += 1
        try:
            R, t, _ = _epnp(pts[sample], uv[sample], k)
        except (DegenerateConfigurationError, np.linalg.LinAlgError):
            continue
        err = _reproj_errors(pts, uv, R, t, k)
        inl = err <= thr
        count = int(inl.sum())
        if count < params.min_inliers:
            continue
        mean_err = float(err[inl].mean())
        if count > best_count or (count == best_count and mean_err < best_err):
            best_count, best_err, best = count, mean_err, (R, t)
            needed = _required_iterations(count / n, params.confidence)

    if best is None:
        raise NoConsensusError(
            f"no hypothesis reached {params.min_inliers} inliers in {it} iterations ({n} correspondences)"
        )

    R, t = best
    inliers = np.nonzero(_reproj_errors(pts, uv, R, t, k) <= thr)[0]
    try:
        R2, t2, _ = _epnp(pts[inliers], uv[inliers], k)
        err2 = _reproj_errors(pts, uv, R2, t2, k)
        inl2 = np.nonzero(err2 <= thr)[0]
        if len(inl2) >= len(inliers):
            R, t, inliers = R2, t2, inl2
    except (DegenerateConfigurationError, np.linalg.LinAlgError):
        pass
    err = _reproj_errors(pts, uv, R, t, k)[inliers]
    return PoseEstimate(Pose(R, t), inliers, float(err.mean()), it)
