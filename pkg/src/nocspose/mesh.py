"""Triangle meshes, the normalized object coordinate space (NOCS) and model info.

Vertices are in millimeters in the model frame. NOCS coordinates are
dimensionless and live in the unit cube: the bounding box is centered at
(0.5, 0.5, 0.5) and uniformly scaled by its longest extent, so aspect ratio
is preserved and degenerate axes collapse to 0.5.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateMeshError, MeshParseError, UnsupportedGeometryError

logger = logging.getLogger(__name__)

DIAMETER_VERTEX_CAP = 10_000
DIAMETER_SUBSAMPLE_SEED = 0


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle mesh.

    Attributes:
        vertices: (N, 3) float array, millimeters.
        triangles: (M, 3) int array of vertex indices.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vertices, np.float64).reshape(-1, 3)
        t = _frozen(self.triangles, np.int64).reshape(-1, 3)
        if len(v) < 3:
            raise DegenerateMeshError(f"mesh needs at least 3 vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise DegenerateMeshError("mesh has non-finite vertex coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise DegenerateMeshError("triangle index out of range")
        if np.all(np.ptp(v, axis=0) == 0):
            raise DegenerateMeshError("all vertices coincide")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def bbox_min(self):
        return self.vertices.min(axis=0)

    @property
    def bbox_max(self):
        return self.vertices.max(axis=0)


@dataclass(frozen=True)
class NocsTransform:
    """Map between model millimeters and NOCS: ``nocs = (p - center) / scale + 0.5``."""

    scale: float
    center: tuple[float, float, float]

    def __post_init__(self):
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"NOCS scale must be positive, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def normalize(self, points):
        return (np.asarray(points, dtype=np.float64) - np.asarray(self.center)) / self.scale + 0.5

    def denormalize(self, nocs):
        return (np.asarray(nocs, dtype=np.float64) - 0.5) * self.scale + np.asarray(self.center)

    def to_dict(self):
        return {"scale": self.scale, "center": list(self.center)}

    @classmethod
    def from_dict(cls, d):
        return cls(scale=d["scale"], center=tuple(d["center"]))


@dataclass(frozen=True, eq=False)
class NocsMesh:
    mesh: TriangleMesh
    transform: NocsTransform

    def model_vertices(self):
        """Vertices mapped back to the model frame (mm)."""
        return self.transform.denormalize(self.mesh.vertices)


@dataclass(frozen=True, eq=False)
class ModelInfo:
    """Object diameter (mm) and its discrete symmetries as 4x4 rigid transforms."""

    diameter: float
    symmetries: tuple = field(default_factory=lambda: (np.eye(4),))

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError(f"diameter must be positive, got {self.diameter}")
        syms = tuple(as_rigid_transform(s) for s in self.symmetries) or (np.eye(4),)
        if not any(np.allclose(s, np.eye(4)) for s in syms):
            syms = (np.eye(4),) + syms
        object.__setattr__(self, "diameter", float(self.diameter))
        object.__setattr__(self, "symmetries", syms)


def as_rigid_transform(sym, atol=1e-6):
    """Coerce a 4x4 matrix, a 3x3 rotation, or an ``{"R", "t"}`` dict to a checked 4x4 array."""
    if isinstance(sym, dict):
        T = np.eye(4)
        T[:3, :3] = np.asarray(sym["R"], dtype=np.float64).reshape(3, 3)
        T[:3, 3] = np.asarray(sym.get("t", np.zeros(3)), dtype=np.float64).reshape(3)
    else:
        a = np.asarray(sym, dtype=np.float64)
        if a.shape == (3, 3):
            T = np.eye(4)
            T[:3, :3] = a
        elif a.shape == (4, 4):
            T = a.copy()
        else:
            raise ValueError(f"symmetry must be 3x3, 4x4 or an R/t dict, got shape {a.shape}")
    R = T[:3, :3]
    if not np.allclose(T[3], [0, 0, 0, 1], atol=atol):
        raise ValueError("symmetry transform must have last row (0, 0, 0, 1)")
    if not np.allclose(R.T @ R, np.eye(3), atol=atol) or abs(np.linalg.det(R) - 1.0) > atol:
        raise ValueError("symmetry rotation must be orthonormal with det +1")
    T.setflags(write=False)
    return T


# ---------------------------------------------------------------------------
# File IO


def load_mesh(path) -> TriangleMesh:
    """Load an ASCII PLY or a triangulated OBJ (``v``/``f`` records only)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return _load_ply(path)
    if suffix == ".obj":
        return _load_obj(path)
    raise MeshParseError(f"unsupported mesh extension {suffix!r}", path=path)


def _load_ply(path):
    with open(path, "r", encoding="ascii", errors="replace") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshParseError("missing 'ply' magic", path=path, line=1)

    elements = []  # [name, count, [property names]]
    fmt = None
    i = 1
    while True:
        if i >= len(lines):
            raise MeshParseError("missing end_header", path=path, line=i)
        tok = lines[i].split()
        i += 1
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "end_header":
            break
        if tok[0] == "format":
            fmt = tok[1] if len(tok) > 1 else None
            if fmt != "ascii":
                raise MeshParseError(f"only ASCII PLY is supported, got format {fmt!r}", path=path, line=i)
        elif tok[0] == "element":
            if len(tok) != 3:
                raise MeshParseError("bad element line", path=path, line=i)
            try:
                elements.append([tok[1], int(tok[2]), []])
            except ValueError:
                raise MeshParseError(f"bad element count {tok[2]!r}", path=path, line=i) from None
        elif tok[0] == "property":
            if not elements:
                raise MeshParseError("property before any element", path=path, line=i)
            elements[-1][2].append(tok[-1])
        else:
            raise MeshParseError(f"unexpected header keyword {tok[0]!r}", path=path, line=i)
    if fmt is None:
        raise MeshParseError("missing format line", path=path)

    vertices, triangles = None, []
    for name, count, props in elements:
        if name == "vertex":
            try:
                ix = [props.index(a) for a in ("x", "y", "z")]
            except ValueError:
                raise MeshParseError("vertex element lacks x/y/z properties", path=path) from None
            vertices = np.empty((count, 3))
            for k in range(count):
                lineno = i + 1
                if i >= len(lines):
                    raise MeshParseError("unexpected end of file in vertex list", path=path, line=lineno)
                tok = lines[i].split()
                i += 1
                if len(tok) < len(props):
                    raise MeshParseError("too few vertex properties", path=path, line=lineno)
                try:
                    vertices[k] = [float(tok[j]) for j in ix]
                except ValueError:
                    raise MeshParseError("non-numeric vertex coordinate", path=path, line=lineno) from None
        elif name == "face":
            for _ in range(count):
                lineno = i + 1
                if i >= len(lines):
                    raise MeshParseError("unexpected end of file in face list", path=path, line=lineno)
                tok = lines[i].split()
                i += 1
                try:
                    idx = [int(t) for t in tok]
                except ValueError:
                    raise MeshParseError("non-integer face index", path=path, line=lineno) from None
                if not idx or len(idx) != idx[0] + 1:
                    raise MeshParseError("face vertex count does not match list length", path=path, line=lineno)
                if idx[0] != 3:
                    raise UnsupportedGeometryError(
                        f"face with {idx[0]} vertices; only triangles are supported", path=path, line=lineno
                    )
                triangles.append((idx[1], idx[2], idx[3], lineno))
        else:
            i += count
    if vertices is None:
        raise MeshParseError("no vertex element", path=path)
    for a, b, c, lineno in triangles:
        if min(a, b, c) < 0 or max(a, b, c) >= len(vertices):
            raise MeshParseError("face index out of range", path=path, line=lineno)
    tris = np.array([t[:3] for t in triangles], dtype=np.int64).reshape(-1, 3)
    return _build(vertices, tris, path)


def _load_obj(path):
    vertices, faces = [], []
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, raw in enumerate(f, start=1):
            tok = raw.split("#", 1)[0].split()
            if not tok:
                continue
            if tok[0] == "v":
                if len(tok) < 4:
                    raise MeshParseError("vertex needs 3 coordinates", path=path, line=lineno)
                try:
                    vertices.append([float(t) for t in tok[1:4]])
                except ValueError:
                    raise MeshParseError("non-numeric vertex coordinate", path=path, line=lineno) from None
            elif tok[0] == "f":
                if len(tok) != 4:
                    raise UnsupportedGeometryError(
                        f"face with {len(tok) - 1} vertices; only triangles are supported", path=path, line=lineno
                    )
                face = []
                for t in tok[1:]:
                    try:
                        k = int(t.split("/")[0])
                    except ValueError:
                        raise MeshParseError(f"bad face index {t!r}", path=path, line=lineno) from None
                    if k < 0:
                        k = len(vertices) + k + 1
                    if k < 1 or k > len(vertices):
                        raise MeshParseError(f"face index {t!r} out of range (OBJ is 1-based)", path=path, line=lineno)
                    face.append(k - 1)
                faces.append(face)
            # vn, vt, o, g, s, usemtl, mtllib: ignored
    return _build(np.array(vertices, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), path)


def _build(vertices, triangles, path):
    try:
        return TriangleMesh(vertices, triangles)
    except DegenerateMeshError as e:
        raise MeshParseError(str(e), path=path) from e


def save_ply(mesh: TriangleMesh, path):
    """Write an ASCII PLY. Coordinates use ``repr`` so loading returns identical floats."""
    path = Path(path)
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(mesh.vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(mesh.triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    out += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    path.write_text("\n".join(out) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# NOCS


def normalize_to_nocs(mesh: TriangleMesh) -> NocsMesh:
    lo, hi = mesh.bbox_min, mesh.bbox_max
    scale = float(np.max(hi - lo))
    if scale <= 0:
        raise DegenerateMeshError("all vertices coincide")
    transform = NocsTransform(scale=scale, center=tuple((lo + hi) / 2.0))
    nocs = np.clip(transform.normalize(mesh.vertices), 0.0, 1.0)
    return NocsMesh(TriangleMesh(nocs, mesh.triangles), transform)


def nocs_to_model(p, t: NocsTransform):
    """Map NOCS point(s) to model millimeters.

    Inputs are clamped to the unit cube first; decoded 8-bit values may sit a
    hair outside it.
    """
    return t.denormalize(np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0))


# ---------------------------------------------------------------------------
# Model info


def max_pairwise_distance(points, chunk=1024):
    """Exact brute-force maximum Euclidean distance between any two points."""
    pts = np.asarray(points, dtype=np.float64)
    best = 0.0
    for s in range(0, len(pts), chunk):
        best = max(best, float(cdist(pts[s : s + chunk], pts[s:]).max()))
    return best


def compute_model_info(mesh: TriangleMesh, symmetries=()) -> ModelInfo:
    """Diameter by exhaustive pair scan; symmetries default to identity only.

    Meshes with more than ``DIAMETER_VERTEX_CAP`` unique vertices are
    subsampled with a fixed seed before the scan, so the result is a lower
    bound in that regime.
    """
    pts = np.unique(mesh.vertices, axis=0)
    if len(pts) > DIAMETER_VERTEX_CAP:
        logger.warning(
            "mesh has %d vertices; diameter computed on a %d-vertex subsample (seed %d)",
            len(pts), DIAMETER_VERTEX_CAP, DIAMETER_SUBSAMPLE_SEED,
        )
        rng = np.random.default_rng(DIAMETER_SUBSAMPLE_SEED)
        pts = pts[np.sort(rng.choice(len(pts), DIAMETER_VERTEX_CAP, replace=False))]
    syms = list(symmetries) if symmetries else [np.eye(4)]
    return ModelInfo(diameter=max_pairwise_distance(pts), symmetries=tuple(syms))
