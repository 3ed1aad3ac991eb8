"""On-disk format for correspondence maps.

Coordinates are stored as an 8-bit RGB PNG (channel = round(coord * 255)),
the mask as an 8-bit grayscale PNG (0 or 255). Pose, intrinsics, NOCS
transform and crop placement go into a JSON sidecar. Quantization happens
only here; in-memory maps stay real-valued.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import CameraIntrinsics, Pose
from .crop import CropInfo, Roi
from .mesh import NocsTransform
from .render import CorrespondenceMap


def quantize_coords(coords):
    return np.clip(np.rint(np.asarray(coords) * 255.0), 0, 255).astype(np.uint8)


def save_map(cmap: CorrespondenceMap, coords_path, mask_path):
    Image.fromarray(quantize_coords(cmap.coords), mode="RGB").save(coords_path, format="PNG")
    Image.fromarray(np.where(cmap.mask, 255, 0).astype(np.uint8), mode="L").save(mask_path, format="PNG")


def load_map(coords_path, mask_path) -> CorrespondenceMap:
    """Read a map written by :func:`save_map`; the mask PNG is authoritative for validity."""
    with Image.open(coords_path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    with Image.open(mask_path) as im:
        mask = np.asarray(im.convert("L")) > 127
    if rgb.shape[:2] != mask.shape:
        raise ValueError(f"{coords_path} and {mask_path} have different sizes")
    return CorrespondenceMap(rgb, mask)


def roundtrip_8bit(cmap: CorrespondenceMap) -> CorrespondenceMap:
    """What a map looks like after a save/load cycle, without touching disk."""
    return CorrespondenceMap(quantize_coords(cmap.coords) / 255.0, cmap.mask)


def write_sidecar(path, *, pose: Pose, intrinsics: CameraIntrinsics, nocs_transform: NocsTransform,
                  roi: Roi | None = None, crop: CropInfo | None = None, extra=None):
    doc = {
        "pose": pose.to_dict(),
        "intrinsics": intrinsics.to_dict(),
        "nocs_transform": nocs_transform.to_dict(),
    }
    if roi is not None:
        doc["roi"] = {"x": roi.x, "y": roi.y, "w": roi.w, "h": roi.h, "out_size": roi.out_size}
    if crop is not None:
        doc["crop"] = crop.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_sidecar(path):
    """Parse a sidecar into a dict of typed objects (missing optional keys are None)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = dict(doc)
    out["pose"] = Pose.from_dict(doc["pose"])
    out["intrinsics"] = CameraIntrinsics.from_dict(doc["intrinsics"])
    out["nocs_transform"] = NocsTransform.from_dict(doc["nocs_transform"])
    out["roi"] = Roi(**doc["roi"]) if "roi" in doc else None
    out["crop"] = CropInfo.from_dict(doc["crop"]) if "crop" in doc else None
    return out
