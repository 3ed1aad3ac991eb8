"""Experiment configuration (a single JSON document)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..augment import DEFAULT_AUG_SPEC, AugSpec
from ..camera import LMO_INTRINSICS, CameraIntrinsics
from ..degrade import DegradationSpec
from ..errors import ConfigError
from ..pnp import RansacParams
from ..synthetic import SHAPES


@dataclass(frozen=True)
class MeshEntry:
    """One object: either a mesh file or a procedural ``shape`` with keyword params."""

    name: str
    path: Path | None = None
    shape: str | None = None
    shape_params: dict = field(default_factory=dict)
    symmetries: tuple = ()

    def to_dict(self):
        d = {"name": self.name}
        if self.path is not None:
            d["path"] = str(self.path)
        if self.shape is not None:
            d["shape"] = self.shape
            if self.shape_params:
                d["params"] = dict(self.shape_params)
        if self.symmetries:
            d["symmetries"] = [list(map(list, s)) for s in self.symmetries]
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    meshes: tuple
    intrinsics: CameraIntrinsics = LMO_INTRINSICS
    distance_mm: tuple = (400.0, 1200.0)
    center_fraction: float = 0.6
    image_count: int = 10
    stride: int = 1
    ransac: RansacParams = RansacParams()
    degradations: tuple = (DegradationSpec("surface_noise", 0.0),)
    augment: bool = False
    aug_spec: AugSpec = DEFAULT_AUG_SPEC
    seed: int = 0
    output_dir: Path = Path("out")
    crop_size: int = 128
    roi_pad: float = 0.1
    workers: int = 1
    timing_runs: int = 100
    priors: Path | None = None

    def __post_init__(self):
        if self.image_count < 1:
            raise ConfigError("image_count must be >= 1")
        if not self.meshes:
            raise ConfigError("at least one mesh is required")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        lo, hi = self.distance_mm
        if not 0 < lo <= hi:
            raise ConfigError(f"bad distance range {self.distance_mm}")
        if not 0 < self.center_fraction <= 1:
            raise ConfigError("center_fraction must be in (0, 1]")
        names = [m.name for m in self.meshes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate mesh names: {names}")
        for m in self.meshes:
            if m.path is not None and not Path(m.path).is_file():
                raise ConfigError(f"mesh file not found: {m.path}")
        if self.priors is not None and not Path(self.priors).is_file():
            raise ConfigError(f"priors file not found: {self.priors}")

    def with_overrides(self, output_dir=None, seed=None, workers=None):
        kw = {}
        if output_dir is not None:
            kw["output_dir"] = Path(output_dir)
        if seed is not None:
            kw["seed"] = int(seed)
        if workers is not None:
            kw["workers"] = int(workers)
        return replace(self, **kw)

    def to_dict(self):
        return {
            "meshes": [m.to_dict() for m in self.meshes],
            "intrinsics": self.intrinsics.to_dict(),
            "pose_sampler": {"distance_mm": list(self.distance_mm), "center_fraction": self.center_fraction},
            "image_count": self.image_count,
            "stride": self.stride,
            "ransac": self.ransac.to_dict(),
            "degradations": [d.to_dict() for d in self.degradations],
            "augment": self.augment,
            "aug_spec": self.aug_spec.to_dict(),
            "seed": self.seed,
            "crop_size": self.crop_size,
            "roi_pad": self.roi_pad,
            "timing_runs": self.timing_runs,
            "priors": str(self.priors) if self.priors is not None else None,
        }


def _expand_degradations(items):
    out = []
    for d in items:
        if "severities" in d:
            out += [DegradationSpec(d["kind"], s) for s in d["severities"]]
        else:
            out.append(DegradationSpec.from_dict(d))
    return tuple(out)


def config_from_dict(doc: dict, base_dir=Path(".")) -> ExperimentConfig:
    """Build a config; relative file paths resolve against ``base_dir``."""
    base_dir = Path(base_dir)
    try:
        meshes = []
        for i, m in enumerate(doc["meshes"]):
            if ("path" in m) == ("shape" in m):
                raise ConfigError(f"mesh #{i} needs exactly one of 'path' or 'shape'")
            if "shape" in m and m["shape"] not in SHAPES:
                raise ConfigError(f"unknown shape {m['shape']!r}; choose from {sorted(SHAPES)}")
            path = base_dir / m["path"] if "path" in m else None
            name = m.get("name") or (Path(m["path"]).stem if path else m["shape"])
            meshes.append(
                MeshEntry(
                    name=name,
                    path=path,
                    shape=m.get("shape"),
                    shape_params=dict(m.get("params", {})),
                    symmetries=tuple(tuple(map(tuple, s)) for s in m.get("symmetries", [])),
                )
            )
        kw = {"meshes": tuple(meshes)}
        if "intrinsics" in doc:
            kw["intrinsics"] = CameraIntrinsics.from_dict(doc["intrinsics"])
        sampler = doc.get("pose_sampler", {})
        if "distance_mm" in sampler:
            kw["distance_mm"] = tuple(float(x) for x in sampler["distance_mm"])
        if "center_fraction" in sampler:
            kw["center_fraction"] = float(sampler["center_fraction"])
        for key in ("image_count", "stride", "seed", "crop_size", "workers", "timing_runs"):
            if key in doc:
                kw[key] = int(doc[key])
        if "roi_pad" in doc:
            kw["roi_pad"] = float(doc["roi_pad"])
        if "ransac" in doc:
            kw["ransac"] = RansacParams(**doc["ransac"])
        if "degradations" in doc:
            kw["degradations"] = _expand_degradations(doc["degradations"])
        if "augment" in doc:
            kw["augment"] = bool(doc["augment"])
        if "aug_spec" in doc:
            kw["aug_spec"] = AugSpec.from_dict(doc["aug_spec"])
        if doc.get("output_dir"):
            kw["output_dir"] = base_dir / doc["output_dir"]
        if doc.get("priors"):
            kw["priors"] = base_dir / doc["priors"]
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config: {e}") from e
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}") from e
    return config_from_dict(doc, base_dir=path.parent)
