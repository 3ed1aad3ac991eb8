"""Procedural test objects (millimeters) standing in for scanned household models."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh


def make_box(size=(100.0, 100.0, 100.0), subdivisions=4, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with each face split into an ``n x n`` grid of quads (two triangles each)."""
    n = int(subdivisions)
    half = np.asarray(size, dtype=np.float64) / 2.0
    verts, tris = [], []
    g = np.linspace(-1.0, 1.0, n + 1)
    for axis in range(3):
        for sign in (-1.0, 1.0):
            a1, a2 = [ax for ax in range(3) if ax != axis]
            base = len(verts)
            for i in range(n + 1):
                for j in range(n + 1):
                    p = np.zeros(3)
                    p[axis] = sign
                    p[a1] = g[i]
                    p[a2] = g[j]
                    verts.append(p * half)
            for i in range(n):
                for j in range(n):
                    q00 = base + i * (n + 1) + j
                    q01, q10, q11 = q00 + 1, q00 + n + 1, q00 + n + 2
                    tris += [(q00, q10, q11), (q00, q11, q01)]
    return _dedupe(np.asarray(verts) + np.asarray(center), np.asarray(tris))


def make_cylinder(radius=40.0, height=120.0, segments=32, rings=4) -> TriangleMesh:
    """Closed cylinder along z, centered at the origin."""
    theta = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    zs = np.linspace(-height / 2, height / 2, rings + 1)
    verts = [(radius * np.cos(t), radius * np.sin(t), zz) for zz in zs for t in theta]
    tris = []
    for r in range(rings):
        for s in range(segments):
            a = r * segments + s
            b = r * segments + (s + 1) % segments
            tris += [(a, b, b + segments), (a, b + segments, a + segments)]
    bottom, top = len(verts), len(verts) + 1
    verts += [(0.0, 0.0, zs[0]), (0.0, 0.0, zs[-1])]
    last = rings * segments
    for s in range(segments):
        tris.append((bottom, (s + 1) % segments, s))
        tris.append((top, last + s, last + (s + 1) % segments))
    return TriangleMesh(np.asarray(verts), np.asarray(tris))


def make_ellipsoid(radii=(60.0, 40.0, 30.0), subdivisions=2) -> TriangleMesh:
    """Ellipsoid from a subdivided icosahedron."""
    verts, tris = _icosphere(subdivisions)
    return TriangleMesh(verts * np.asarray(radii, dtype=np.float64), tris)


def make_l_block(arm=(110.0, 70.0), thickness=35.0, depth=40.0, subdivisions=3) -> TriangleMesh:
    """Asymmetric L-shaped block: two boxes sharing a corner, no rotational symmetry."""
    a = make_box((arm[0], thickness, depth), subdivisions, center=(arm[0] / 2, thickness / 2, 0.0))
    b = make_box((thickness, arm[1], depth), subdivisions, center=(thickness / 2, thickness + arm[1] / 2, 0.0))
    verts = np.vstack([a.vertices, b.vertices])
    tris = np.vstack([a.triangles, b.triangles + len(a.vertices)])
    return TriangleMesh(verts - verts.mean(axis=0), tris)


def make_plate(size=(100.0, 100.0), subdivisions=4) -> TriangleMesh:
    """Flat square plate in the z = 0 plane, centered at the origin."""
    n = int(subdivisions)
    g = np.linspace(-0.5, 0.5, n + 1)
    verts = [(x * size[0], y * size[1], 0.0) for y in g for x in g]
    tris = []
    for i in range(n):
        for j in range(n):
            q = i * (n + 1) + j
            tris += [(q, q + 1, q + n + 2), (q, q + n + 2, q + n + 1)]
    return TriangleMesh(np.asarray(verts), np.asarray(tris))


SHAPES = {
    "box": make_box,
    "cylinder": make_cylinder,
    "ellipsoid": make_ellipsoid,
    "l_block": make_l_block,
    "plate": make_plate,
}


def _dedupe(verts, tris):
    uniq, inverse = np.unique(np.round(verts, 9), axis=0, return_inverse=True)
    return TriangleMesh(uniq, inverse.reshape(-1)[tris])


def _icosphere(subdivisions):
    t = (1.0 + 5**0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.asarray(verts), np.asarray(faces)
