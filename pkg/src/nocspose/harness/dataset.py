"""Synthetic dataset generation: rendered NOCS maps, masks, crops and sidecars.

Layout under the output directory::

    index.json                 sample list, per-object info, config echo
    meshes/<name>.ply          procedural meshes (file-based meshes stay in place)
    samples/<id>/full_coords.png, full_mask.png      full-frame NOCS map
    samples/<id>/crop_coords.png, crop_mask.png      ROI crop
    samples/<id>/rgb.png, rgb_crop.png[, rgb_crop_aug.png]
    samples/<id>/meta.json     pose, intrinsics, NOCS transform, ROI, crop
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..augment import apply_photometric_aug
from ..camera import Pose, random_rotation
from ..crop import Roi, crop_roi
from ..errors import DegenerateMeshError, MeshParseError
from ..mapio import save_map, write_sidecar
from ..mesh import ModelInfo, NocsMesh, TriangleMesh, compute_model_info, load_mesh, normalize_to_nocs, save_ply
from ..render import mask_bbox, render_flat_rgb, render_nocs_map
from ..synthetic import SHAPES
from .config import ExperimentConfig
from .priors import load_location_priors

logger = logging.getLogger(__name__)

DATASET_SCHEMA = "nocspose-dataset/1"
MAX_POSE_DRAWS = 20


@dataclass(frozen=True)
class ObjectModel:
    name: str
    mesh_path: Path
    mesh: TriangleMesh
    nocs: NocsMesh
    info: ModelInfo

    @property
    def points(self):
        return self.mesh.vertices


def sample_seed(master_seed, *keys):
    """64-bit seed derived from the master seed and integer keys."""
    return int(np.random.SeedSequence([int(master_seed), *map(int, keys)]).generate_state(1, dtype=np.uint64)[0])


def sample_pose(rng, config: ExperimentConfig) -> Pose:
    """Uniform rotation; depth uniform in range; origin projects in the central window."""
    k = config.intrinsics
    R = random_rotation(rng)
    z = rng.uniform(*config.distance_mm)
    lo, hi = 0.5 - config.center_fraction / 2, 0.5 + config.center_fraction / 2
    u = rng.uniform(lo * k.width, hi * k.width)
    v = rng.uniform(lo * k.height, hi * k.height)
    return Pose(R, [(u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z])


def _prepare_objects(config: ExperimentConfig, out: Path):
    objects = []
    for entry in config.meshes:
        try:
            if entry.shape is not None:
                mesh = SHAPES[entry.shape](**entry.shape_params)
                path = out / "meshes" / f"{entry.name}.ply"
                path.parent.mkdir(parents=True, exist_ok=True)
                save_ply(mesh, path)
                mesh = load_mesh(path)
            else:
                path = Path(entry.path)
                mesh = load_mesh(path)
            nocs = normalize_to_nocs(mesh)
            info = compute_model_info(mesh, entry.symmetries)
        except (MeshParseError, DegenerateMeshError) as e:
            logger.warning("skipping object %s: %s", entry.name, e)
            continue
        objects.append(ObjectModel(entry.name, path, mesh, nocs, info))
    return objects


def _object_record(obj: ObjectModel, out: Path):
    try:
        mesh = os.path.relpath(obj.mesh_path, out)
    except ValueError:
        mesh = str(obj.mesh_path)
    return {
        "mesh": mesh,
        "diameter_mm": obj.info.diameter,
        "nocs_transform": obj.nocs.transform.to_dict(),
        "symmetries": [s.tolist() for s in obj.info.symmetries],
    }


def generate_dataset(config: ExperimentConfig) -> Path:
    """Render ``image_count`` samples per object; returns the index path.

    Everything is a function of the config and its master seed, so two runs
    produce identical files.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")

    k = config.intrinsics
    priors = {}
    if config.priors is not None:
        for p in load_location_priors(config.priors, k.width, k.height):
            best = priors.get((p.image_id, p.obj_id))
            if best is None or p.score > best.score:
                priors[(p.image_id, p.obj_id)] = p

    objects = _prepare_objects(config, out)
    samples = []
    idx = 0
    for obj in objects:
        for _ in range(config.image_count):
            sid = f"{idx:06d}"
            rng = np.random.default_rng(sample_seed(config.seed, idx))
            for _attempt in range(MAX_POSE_DRAWS):
                pose = sample_pose(rng, config)
                full = render_nocs_map(obj.nocs, pose, k)
                box = mask_bbox(full.mask)
                if box is not None:
                    break
            else:
                logger.warning("sample %s: object never visible after %d pose draws; skipped", sid, MAX_POSE_DRAWS)
                idx += 1
                continue

            prior = priors.get((idx, obj.name))
            roi_box = prior.bbox if prior is not None else box
            roi = Roi.around_box(roi_box, pad=config.roi_pad, out_size=config.crop_size)
            crop, info = crop_roi(full, roi)

            d = out / "samples" / sid
            d.mkdir(parents=True, exist_ok=True)
            save_map(full, d / "full_coords.png", d / "full_mask.png")
            save_map(crop, d / "crop_coords.png", d / "crop_mask.png")
            rgb, _ = render_flat_rgb(obj.mesh, pose, k)
            rgb_crop, _ = crop_roi(rgb, roi)
            Image.fromarray(rgb).save(d / "rgb.png", format="PNG")
            Image.fromarray(rgb_crop).save(d / "rgb_crop.png", format="PNG")
            if config.augment:
                aug = apply_photometric_aug(rgb_crop, config.aug_spec, sample_seed(config.seed, idx, 1))
                Image.fromarray(aug).save(d / "rgb_crop_aug.png", format="PNG")
            write_sidecar(
                d / "meta.json",
                pose=pose,
                intrinsics=k,
                nocs_transform=obj.nocs.transform,
                roi=roi,
                crop=info,
                extra={
                    "sample_id": sid,
                    "obj": obj.name,
                    "roi_source": "detection" if prior is not None else "gt_mask",
                },
            )
            samples.append({"id": sid, "obj": obj.name, "dir": f"samples/{sid}"})
            idx += 1

    index = {
        "schema": DATASET_SCHEMA,
        "seed": config.seed,
        "intrinsics": k.to_dict(),
        "objects": {o.name: _object_record(o, out) for o in objects},
        "samples": samples,
        "config": config.to_dict(),
    }
    path = out / "index.json"
    path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %d samples to %s", len(samples), out)
    return path


def load_index(dataset_dir):
    path = Path(dataset_dir) / "index.json"
    if not path.is_file():
        raise FileNotFoundError(f"no dataset index at {path}; run `generate` first")
    return json.loads(path.read_text(encoding="utf-8"))


def load_objects(dataset_dir, index=None):
    """Rebuild ObjectModel records from a dataset index."""
    dataset_dir = Path(dataset_dir)
    index = index or load_index(dataset_dir)
    objects = {}
    for name, rec in index["objects"].items():
        mesh_path = Path(rec["mesh"])
        if not mesh_path.is_absolute():
            mesh_path = dataset_dir / mesh_path
        mesh = load_mesh(mesh_path)
        nocs = normalize_to_nocs(mesh)
        info = ModelInfo(rec["diameter_mm"], tuple(np.asarray(s) for s in rec["symmetries"]))
        objects[name] = ObjectModel(name, mesh_path, mesh, nocs, info)
    return objects
