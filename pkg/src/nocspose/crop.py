"""Region-of-interest cropping and resizing.

Correspondence maps and masks are resampled nearest-neighbor so no NOCS
value is ever invented at object boundaries; RGB crops use bilinear
interpolation. Crop pixel ``j`` samples source column
``x + floor((j + 0.5) * w / out_w)``, computed in integer arithmetic so that
:class:`CropInfo` maps every crop pixel back to its source pixel exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import CropError
from .render import CorrespondenceMap

DEFAULT_CROP_SIZE = 128


@dataclass(frozen=True)
class Roi:
    x: int
    y: int
    w: int
    h: int
    out_size: int = DEFAULT_CROP_SIZE

    def __post_init__(self):
        for name in ("x", "y", "w", "h", "out_size"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.w < 1 or self.h < 1 or self.out_size < 1:
            raise CropError(f"ROI size must be positive: {self}")

    def intersects(self, width, height):
        return self.x < width and self.y < height and self.x + self.w > 0 and self.y + self.h > 0

    @classmethod
    def around_box(cls, box, pad=0.1, out_size=DEFAULT_CROP_SIZE, square=True):
        """Square ROI around an (x, y, w, h) box, each side grown by ``pad`` of its length."""
        bx, by, bw, bh = box
        cx, cy = bx + bw / 2.0, by + bh / 2.0
        w, h = bw * (1 + pad), bh * (1 + pad)
        if square:
            w = h = max(w, h)
        w, h = max(int(np.ceil(w)), 1), max(int(np.ceil(h)), 1)
        return cls(int(np.floor(cx - w / 2.0)), int(np.floor(cy - h / 2.0)), w, h, out_size)


@dataclass(frozen=True)
class CropInfo:
    """Placement of a crop in the full image: offset plus per-axis scale."""

    x: int
    y: int
    w: int
    h: int
    out_w: int
    out_h: int

    @property
    def offset(self):
        return (self.x, self.y)

    @property
    def scale(self):
        """Source pixels per crop pixel along (x, y)."""
        return (self.w / self.out_w, self.h / self.out_h)

    def source_index(self, cols, rows):
        """Full-image integer pixel indices sampled by crop pixels (cols, rows)."""
        cols = np.asarray(cols, dtype=np.int64)
        rows = np.asarray(rows, dtype=np.int64)
        sx = self.x + ((2 * cols + 1) * self.w) // (2 * self.out_w)
        sy = self.y + ((2 * rows + 1) * self.h) // (2 * self.out_h)
        return sx, sy

    def source_pixel_center(self, cols, rows):
        """Continuous full-image coordinates of the sampled source pixel centers."""
        sx, sy = self.source_index(cols, rows)
        return sx + 0.5, sy + 0.5

    def to_full(self, u, v):
        """Map continuous crop coordinates to continuous full-image coordinates."""
        sx, sy = self.scale
        return self.x + np.asarray(u) * sx, self.y + np.asarray(v) * sy

    def to_dict(self):
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h, "out_w": self.out_w, "out_h": self.out_h}

    @classmethod
    def from_dict(cls, d):
        return cls(d["x"], d["y"], d["w"], d["h"], d["out_w"], d["out_h"])

    @classmethod
    def identity(cls, width, height):
        return cls(0, 0, width, height, width, height)


def crop_roi(data, roi: Roi):
    """Crop and resize a correspondence map, a mask, or an RGB image to ``roi.out_size`` squared.

    Returns ``(cropped, CropInfo)``. Source pixels outside the image read as
    background (maps, masks) or black (RGB).
    """
    if isinstance(data, CorrespondenceMap):
        H, W = data.height, data.width
    else:
        data = np.asarray(data)
        H, W = data.shape[:2]
    if not roi.intersects(W, H):
        raise CropError(f"ROI {roi} does not intersect the {W}x{H} image")
    info = CropInfo(roi.x, roi.y, roi.w, roi.h, roi.out_size, roi.out_size)
    cols = np.arange(info.out_w)
    rows = np.arange(info.out_h)
    sx, sy = info.source_index(cols, rows)
    gx, gy = np.meshgrid(sx, sy)
    inside = (gx >= 0) & (gx < W) & (gy >= 0) & (gy < H)
    cgx, cgy = np.clip(gx, 0, W - 1), np.clip(gy, 0, H - 1)

    if isinstance(data, CorrespondenceMap):
        mask = data.mask[cgy, cgx] & inside
        coords = np.where(mask[..., None], data.coords[cgy, cgx], 0.0)
        depth = None
        if data.depth is not None:
            depth = np.where(mask, data.depth[cgy, cgx], np.nan)
        return CorrespondenceMap(coords, mask, depth), info

    if data.ndim == 2 or data.dtype == bool:
        out = np.where(inside, data[cgy, cgx], np.zeros((), dtype=data.dtype))
        return out, info

    # RGB: bilinear at the continuous source position of each crop pixel center.
    u = info.x + (cols + 0.5) * info.w / info.out_w - 0.5
    v = info.y + (rows + 0.5) * info.h / info.out_h - 0.5
    uu, vv = np.meshgrid(u, v)
    img = data.astype(np.float64)
    chans = [
        ndimage.map_coordinates(img[..., c], [vv, uu], order=1, mode="constant", cval=0.0)
        for c in range(img.shape[2])
    ]
    out = np.stack(chans, axis=-1)
    if np.issubdtype(data.dtype, np.integer):
        info_max = np.iinfo(data.dtype).max
        out = np.clip(np.rint(out), 0, info_max).astype(data.dtype)
    return out, info
