"""Synthetic corruption of correspondence maps.

Each kind isolates one error mode seen in learned image-to-image
predictions: silhouettes that are too thin or too fat, smeared or noisy
surfaces, coarse holes, periodic artifacts, and background that bleeds into
the object. ``severity == 0`` returns the input unchanged for every kind.

Severity units:
    boundary_erode, boundary_dilate, mask_bleed: pixels (disk radius / band width)
    gaussian_blur_coords: Gaussian sigma in pixels
    coarse_dropout_mask: expected fraction of valid pixels removed
    pattern_artifact, surface_noise: amplitude in NOCS units
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .render import CorrespondenceMap

KINDS = (
    "boundary_erode",
    "boundary_dilate",
    "gaussian_blur_coords",
    "coarse_dropout_mask",
    "pattern_artifact",
    "surface_noise",
    "mask_bleed",
)

DROPOUT_CELL_FRACTION = 0.05  # block side relative to the shorter map side
PATTERN_HALF_PERIOD = 4  # pixels


@dataclass(frozen=True)
class DegradationSpec:
    kind: str
    severity: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown degradation kind {self.kind!r}; expected one of {KINDS}")
        if not self.severity >= 0:
            raise ValueError("severity must be >= 0")
        object.__setattr__(self, "severity", float(self.severity))

    def to_dict(self):
        return {"kind": self.kind, "severity": self.severity}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("severity", 0.0))


def disk(radius):
    """Boolean disk structuring element: offsets with dx^2 + dy^2 <= radius^2."""
    r = int(np.floor(radius))
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return xx * xx + yy * yy <= radius * radius


def degrade_map(cmap: CorrespondenceMap, spec: DegradationSpec, seed=0) -> CorrespondenceMap:
    """Apply one degradation; deterministic given ``seed``. Depth is dropped."""
    if spec.kind not in KINDS:
        raise ValueError(f"unknown degradation kind {spec.kind!r}")
    if spec.severity == 0:
        return cmap
    rng = np.random.default_rng(seed)
    fn = _KIND_FUNCS[spec.kind]
    coords, mask = fn(np.array(cmap.coords), np.array(cmap.mask), spec.severity, rng)
    return CorrespondenceMap(coords, mask)


def _nearest(mask):
    """Indices of, and exact squared distance to, the nearest True pixel of ``mask``."""
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    yy, xx = np.indices(mask.shape)
    return iy, ix, (iy - yy) ** 2 + (ix - xx) ** 2


def _dilated(mask, s):
    # Same set as binary dilation with disk(s), at a cost independent of s.
    return _nearest(mask)[2] <= s * s


def _erode(coords, mask, s, rng):
    # Pixels outside the image count as background; a one-pixel frame suffices
    # because the disk is convex.
    holes = ~np.pad(mask, 1, constant_values=False)
    new = ~_dilated(holes, s)[1:-1, 1:-1] if holes.any() else mask
    coords[~new] = 0.0
    return coords, new


def _dilate(coords, mask, s, rng):
    if not mask.any():
        return coords, mask
    iy, ix, d2 = _nearest(mask)
    new = d2 <= s * s
    grown = new & ~mask
    coords[grown] = coords[iy[grown], ix[grown]]
    return coords, new


def _bleed(coords, mask, s, rng):
    # Continue the surface past the silhouette: mirror the nearest boundary
    # value's inward difference outward (first-order extrapolation).
    if not mask.any():
        return coords, mask
    H, W = mask.shape
    iy, ix, d2 = _nearest(mask)
    new = d2 <= s * s
    gy, gx = np.nonzero(new & ~mask)
    py, px = iy[gy, gx], ix[gy, gx]
    ry, rx = 2 * py - gy, 2 * px - gx
    ok = (ry >= 0) & (ry < H) & (rx >= 0) & (rx < W)
    ok[ok] = mask[ry[ok], rx[ok]]
    base = coords[py, px]
    inner = base.copy()
    inner[ok] = coords[ry[ok], rx[ok]]
    coords[gy, gx] = np.clip(2.0 * base - inner, 0.0, 1.0)
    return coords, new


def _blur(coords, mask, s, rng):
    m = mask.astype(np.float64)
    wsum = ndimage.gaussian_filter(m, s, mode="constant")
    with np.errstate(invalid="ignore", divide="ignore"):
        for c in range(3):
            blurred = ndimage.gaussian_filter(coords[..., c] * m, s, mode="constant") / wsum
            coords[..., c] = np.where(mask & (wsum > 0), blurred, coords[..., c])
    return coords, mask


def _dropout(coords, mask, s, rng):
    H, W = mask.shape
    cell = max(1, int(round(DROPOUT_CELL_FRACTION * min(H, W))))
    gh, gw = -(-H // cell), -(-W // cell)
    drop = rng.random((gh, gw)) < min(s, 1.0)
    drop = np.repeat(np.repeat(drop, cell, axis=0), cell, axis=1)[:H, :W]
    new = mask & ~drop
    coords[~new] = 0.0
    return coords, new


def _pattern(coords, mask, s, rng):
    H, W = mask.shape
    yy, xx = np.mgrid[0:H, 0:W]
    sign = np.where(((yy // PATTERN_HALF_PERIOD) + (xx // PATTERN_HALF_PERIOD)) % 2 == 0, 1.0, -1.0)
    coords[mask] = np.clip(coords[mask] + s * sign[mask][:, None], 0.0, 1.0)
    return coords, mask


def _noise(coords, mask, s, rng):
    n = int(mask.sum())
    coords[mask] = np.clip(coords[mask] + rng.normal(0.0, s, size=(n, 3)), 0.0, 1.0)
    return coords, mask


_KIND_FUNCS = {
    "boundary_erode": _erode,
    "boundary_dilate": _dilate,
    "gaussian_blur_coords": _blur,
    "coarse_dropout_mask": _dropout,
    "pattern_artifact": _pattern,
    "surface_noise": _noise,
    "mask_bleed": _bleed,
}
