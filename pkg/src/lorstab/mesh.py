"""Triangulated sphere meshes: icosphere generation, validation, text IO.

Meshes carry ambient coordinates (4 per vertex once embedded) plus, for
surfaces built over the unit sphere, the underlying spherical directions.
The icosphere ladder (subdivided icosahedron, levels 3..6 in practice) is
the only generator; imported meshes just need to be watertight, oriented
triangulations of the sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["TriangleMesh", "icosphere", "validate_closed_oriented", "save_mesh", "load_mesh"]


@dataclass(frozen=True)
class TriangleMesh:
    """Watertight oriented triangle mesh with ambient vertex coordinates."""

    vertices: np.ndarray          # (V, 4) ambient coordinates
    faces: np.ndarray             # (F, 3) vertex indices, outward-oriented
    level: int | None = None      # icosphere subdivision depth, if applicable

    @property
    def nvertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def nfaces(self) -> int:
        return self.faces.shape[0]


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    r = (1.0 + np.sqrt(5.0)) / 2.0
    pts = np.array(
        [
            [-1.0, r, 0.0], [1.0, r, 0.0], [-1.0, -r, 0.0], [1.0, -r, 0.0],
            [0.0, -1.0, r], [0.0, 1.0, r], [0.0, -1.0, -r], [0.0, 1.0, -r],
            [r, 0.0, -1.0], [r, 0.0, 1.0], [-r, 0.0, -1.0], [-r, 0.0, 1.0],
        ]
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [5, 4, 9], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts, faces


def icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere points (V, 3) and outward-oriented faces for 10*4^level + 2 vertices."""
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    pts, faces = _icosahedron()
    points = [p for p in pts]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            idx = midpoint.get(key)
            if idx is None:
                m = points[i] + points[j]
                m /= np.linalg.norm(m)
                idx = len(points)
                points.append(m)
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = np.array(new_faces, dtype=int)
    pts = np.array(points)
    # enforce outward orientation (positive triple product for a convex body)
    p0, p1, p2 = pts[faces[:, 0]], pts[faces[:, 1]], pts[faces[:, 2]]
    flip = np.einsum("fi,fi->f", np.cross(p1 - p0, p2 - p0), p0) < 0
    faces[flip] = faces[flip][:, ::-1]
    return pts, faces


def validate_closed_oriented(faces: np.ndarray, nvertices: int) -> None:
    """Raise unless every undirected edge is shared by exactly two faces with
    opposite directions (watertight, consistently oriented)."""
    if faces.size and (faces.min() < 0 or faces.max() >= nvertices):
        raise ValueError("face index out of range")
    directed = set()
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            if e in directed:
                raise ValueError(f"duplicated directed edge {e}: inconsistent orientation")
            directed.add(tuple(int(x) for x in e))
    for i, j in directed:
        if (j, i) not in directed:
            raise ValueError(f"boundary or non-manifold edge ({i}, {j}): mesh is not watertight")


def save_mesh(path: str | Path, mesh: TriangleMesh) -> None:
    """Line-oriented text format: 'v x1 x2 x3 x4' then 'f i j k' (0-based)."""
    lines = []
    for v in mesh.vertices:
        lines.append("v " + " ".join(format(x, ".17g") for x in v))
    for f in mesh.faces:
        lines.append(f"f {f[0]} {f[1]} {f[2]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mesh(path: str | Path) -> TriangleMesh:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 vertex coordinates")
            verts.append([float(x) for x in rest])
        elif tag == "f":
            if len(rest) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 face indices")
            faces.append([int(x) for x in rest])
        else:
            raise ValueError(f"{path}:{lineno}: unknown record '{tag}'")
    vertices = np.array(verts, dtype=float)
    face_arr = np.array(faces, dtype=int)
    validate_closed_oriented(face_arr, len(verts))
    return TriangleMesh(vertices=vertices, faces=face_arr, level=None)
