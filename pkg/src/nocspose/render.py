"""Z-buffered software rasterization of NOCS meshes into correspondence maps.

Sampling happens at pixel centers (x + 0.5, y + 0.5). Coverage on shared
edges follows the top-left rule, and ties in depth keep the earlier
triangle, so output depends only on the inputs. Attributes are interpolated
perspective-correctly, which makes every covered pixel's NOCS value the exact
surface point hit by the ray through the pixel center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, Pose
from .mesh import NocsMesh, TriangleMesh

NEAR_PLANE = 1e-3  # mm; triangles with any vertex closer are dropped
VALID_ZERO_EPS = 1e-6  # stand-in for a valid pixel whose coordinate is exactly (0, 0, 0)


@dataclass(frozen=True, eq=False)
class CorrespondenceMap:
    """Per-pixel NOCS coordinates with a validity mask.

    Masked-off pixels hold (0, 0, 0) in ``coords`` and NaN in ``depth``.
    """

    coords: np.ndarray
    mask: np.ndarray
    depth: np.ndarray | None = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        if coords.ndim != 3 or coords.shape[2] != 3 or coords.shape[:2] != mask.shape:
            raise ValueError(f"coords {coords.shape} and mask {mask.shape} are inconsistent")
        coords[~mask] = 0.0
        coords = enforce_valid_nonzero(np.clip(coords, 0.0, 1.0), mask)
        coords.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "mask", mask)
        if self.depth is not None:
            depth = np.array(self.depth, dtype=np.float64, copy=True)
            if depth.shape != mask.shape:
                raise ValueError("depth shape does not match mask")
            depth[~mask] = np.nan
            depth.setflags(write=False)
            object.__setattr__(self, "depth", depth)

    @property
    def height(self):
        return self.mask.shape[0]

    @property
    def width(self):
        return self.mask.shape[1]

    @classmethod
    def empty(cls, width, height, with_depth=True):
        depth = np.full((height, width), np.nan) if with_depth else None
        return cls(np.zeros((height, width, 3)), np.zeros((height, width), bool), depth)

    def equals(self, other) -> bool:
        """Bit-exact comparison, treating NaN depth entries as equal."""
        if not (np.array_equal(self.coords, other.coords) and np.array_equal(self.mask, other.mask)):
            return False
        if (self.depth is None) != (other.depth is None):
            return False
        return self.depth is None or np.array_equal(self.depth, other.depth, equal_nan=True)


def enforce_valid_nonzero(coords, mask):
    """Keep the background sentinel unambiguous: valid pixels never hold exact (0, 0, 0)."""
    zero = mask & np.all(coords == 0.0, axis=-1)
    if zero.any():
        coords = coords.copy() if not coords.flags.writeable else coords
        coords[zero] = VALID_ZERO_EPS
    return coords


def _top_left(p, q):
    # Interior lies where the edge functions in rasterize are positive; an edge
    # owns its boundary pixels if it is a left edge or a horizontal top edge.
    dx, dy = q[0] - p[0], q[1] - p[1]
    return dy < 0 or (dy == 0 and dx > 0)


def rasterize(cam_vertices, triangles, k: CameraIntrinsics):
    """Z-buffer a camera-frame triangle soup.

    Returns ``(zbuf, tri_id, weights)``: per-pixel depth (inf if empty), the
    winning triangle index (-1 if empty) and its perspective-correct
    barycentric weights, shape (H, W, 3), ordered like the triangle's
    vertex indices.
    """
    W, H = k.width, k.height
    cam = np.asarray(cam_vertices, dtype=np.float64)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * cam[:, 0] / z + k.cx
        v = k.fy * cam[:, 1] / z + k.cy

    zbuf = np.full((H, W), np.inf)
    tri_id = np.full((H, W), -1, dtype=np.int64)
    weights = np.zeros((H, W, 3))

    front = np.all(z[tris] > NEAR_PLANE, axis=1)
    tu, tv = u[tris], v[tris]
    # Pixel index range whose centers can fall in each triangle's bbox.
    with np.errstate(invalid="ignore"):
        x0 = np.maximum(np.ceil(tu.min(axis=1) - 0.5), 0)
        x1 = np.minimum(np.floor(tu.max(axis=1) - 0.5), W - 1)
        y0 = np.maximum(np.ceil(tv.min(axis=1) - 0.5), 0)
        y1 = np.minimum(np.floor(tv.max(axis=1) - 0.5), H - 1)
        todo = np.nonzero(front & (x0 <= x1) & (y0 <= y1))[0]

    for ti in todo:
        ia, ib, ic = 0, 1, 2
        a, b, c = tris[ti]
        p0 = (u[a], v[a])
        p1 = (u[b], v[b])
        p2 = (u[c], v[c])
        area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if area == 0 or not np.isfinite(area):
            continue
        if area < 0:
            b, c, ib, ic = c, b, ic, ib
            p1, p2 = p2, p1
            area = -area
        ox, oy = int(x0[ti]), int(y0[ti])
        xs = np.arange(ox, int(x1[ti]) + 1) + 0.5
        ys = np.arange(oy, int(y1[ti]) + 1) + 0.5
        px, py = np.meshgrid(xs, ys)
        w0 = (p2[0] - p1[0]) * (py - p1[1]) - (p2[1] - p1[1]) * (px - p1[0])
        w1 = (p0[0] - p2[0]) * (py - p2[1]) - (p0[1] - p2[1]) * (px - p2[0])
        w2 = (p1[0] - p0[0]) * (py - p0[1]) - (p1[1] - p0[1]) * (px - p0[0])
        inside = (
            ((w0 > 0) | ((w0 == 0) & _top_left(p1, p2)))
            & ((w1 > 0) | ((w1 == 0) & _top_left(p2, p0)))
            & ((w2 > 0) | ((w2 == 0) & _top_left(p0, p1)))
        )
        if not inside.any():
            continue
        iy, ix = np.nonzero(inside)
        l0 = w0[iy, ix] / area / z[a]
        l1 = w1[iy, ix] / area / z[b]
        l2 = w2[iy, ix] / area / z[c]
        inv = l0 + l1 + l2
        zpix = 1.0 / inv
        gy, gx = iy + oy, ix + ox
        closer = zpix < zbuf[gy, gx]
        if not closer.any():
            continue
        gy, gx, inv = gy[closer], gx[closer], inv[closer]
        zbuf[gy, gx] = zpix[closer]
        tri_id[gy, gx] = ti
        weights[gy, gx, ia] = l0[closer] / inv
        weights[gy, gx, ib] = l1[closer] / inv
        weights[gy, gx, ic] = l2[closer] / inv
    return zbuf, tri_id, weights


def render_nocs_map(nocs: NocsMesh, pose: Pose, k: CameraIntrinsics) -> CorrespondenceMap:
    """Render the NOCS coordinates of ``nocs`` seen under ``pose`` through camera ``k``.

    The pose acts on model-frame vertices, i.e. NOCS vertices are first mapped
    back to millimeters. Objects that are off-screen or behind the camera give
    an all-background map.
    """
    tris = nocs.mesh.triangles
    zbuf, tri_id, w = rasterize(pose.transform(nocs.model_vertices()), tris, k)
    mask = tri_id >= 0
    coords = np.zeros(mask.shape + (3,))
    corner = nocs.mesh.vertices[tris[tri_id[mask]]]  # (n, 3 vertices, 3 coords)
    coords[mask] = np.einsum("nv,nvc->nc", w[mask], corner)
    return CorrespondenceMap(coords, mask, np.where(mask, zbuf, np.nan))


def render_flat_rgb(mesh: TriangleMesh, pose: Pose, k: CameraIntrinsics, color=(180, 140, 90),
                    background=(40, 40, 40), ambient=0.3):
    """Flat-shaded uint8 RGB render with a headlight; returns (image, mask)."""
    cam = pose.transform(mesh.vertices)
    zbuf, tri_id, _ = rasterize(cam, mesh.triangles, k)
    mask = tri_id >= 0
    tv = cam[mesh.triangles]
    normals = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    norm = np.linalg.norm(normals, axis=1)
    centers = tv.mean(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.abs(np.einsum("ij,ij->i", normals, centers)) / (norm * np.linalg.norm(centers, axis=1))
    shade = ambient + (1 - ambient) * np.nan_to_num(lam)
    img = np.empty(mask.shape + (3,))
    img[:] = background
    img[mask] = np.outer(shade[tri_id[mask]], color)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), mask


def mask_bbox(mask):
    """Tight (x, y, w, h) box around a boolean mask, or None when empty."""
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return None
    return int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)
