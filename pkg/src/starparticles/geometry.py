"""Triangle meshes of simulated particles and planar outlines."""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Optional, Union

import numpy as np

from .errors import GeometryError

__all__ = [
    "TriangleMesh",
    "triangulate",
    "export_obj",
    "parse_obj",
    "polygon_outline",
    "outline_csv",
]

Destination = Optional[Union[str, os.PathLike, BinaryIO]]


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise GeometryError("face index out of range")

    def edges(self) -> np.ndarray:
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges()) + len(self.faces)

    def signed_volume(self) -> float:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return float(np.einsum("ij,ij->", a, np.cross(b, c)) / 6.0)


def triangulate(field) -> TriangleMesh:
    """Closed mesh of the radial graph of a sphere field on the latitude-longitude grid.

    Ring 0 (the north pole repeated M2 times) becomes one vertex.  The grid
    has no south pole, so a synthetic one is added at the mean radius of
    the last ring.  Faces are oriented outward.
    """
    if field.domain != "sphere":
        raise GeometryError("triangulate needs a sphere field")
    M1, M2 = field.config.M1, field.config.M2
    if M1 < 2 or M2 < 3:
        raise GeometryError("triangulation needs M1 >= 2 and M2 >= 3")
    x = np.asarray(field.values, dtype=float)
    dirs = np.asarray(field.directions, dtype=float)
    if x.size != M1 * M2:
        raise GeometryError("field size does not match its grid")
    rings = (dirs * x[:, None])[M2:]
    last = x[(M1 - 1) * M2:]
    verts = np.vstack([[0.0, 0.0, x[0]], rings, [0.0, 0.0, -last.mean()]])
    south = len(verts) - 1

    def ring(i):  # vertex ids of grid ring i >= 1
        return 1 + (i - 1) * M2 + np.arange(M2)

    faces = []
    r1 = ring(1)
    faces.append(np.stack([np.zeros(M2, dtype=np.int64), r1, np.roll(r1, -1)], axis=1))
    for i in range(1, M1 - 1):
        a, d = ring(i), ring(i + 1)
        b, c = np.roll(a, -1), np.roll(d, -1)
        faces.append(np.stack([a, d, c], axis=1))
        faces.append(np.stack([a, c, b], axis=1))
    rl = ring(M1 - 1)
    faces.append(np.stack([np.full(M2, south), np.roll(rl, -1), rl], axis=1))
    meta = {
        "M1": M1,
        "M2": M2,
        "north_pole": "grid ring 0 collapsed to one vertex",
        "south_pole": "synthetic vertex at the mean radius of the last ring",
        "south_pole_radius": float(last.mean()),
    }
    return TriangleMesh(verts, np.concatenate(faces), meta)


def _render_obj(mesh: TriangleMesh) -> bytes:
    out = io.StringIO()
    for v in mesh.vertices:
        out.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
    for f in mesh.faces:
        out.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    return out.getvalue().encode("ascii")


def export_obj(mesh: TriangleMesh, destination: Destination = None) -> bytes:
    """OBJ text ("v x y z" with 17 significant digits, 1-based "f a b c"); written when a destination is given."""
    data = _render_obj(mesh)
    if destination is None:
        return data
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return data


def parse_obj(source: Union[bytes, str, os.PathLike]) -> TriangleMesh:
    """Read back the vertex and triangle records of an OBJ file or byte string."""
    if isinstance(source, bytes):
        text = source.decode("ascii")
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64))


def polygon_outline(field) -> np.ndarray:
    """Closed polyline (x(u) cos phi, x(u) sin phi) of a circle field; the first point is repeated."""
    if field.domain != "circle":
        raise GeometryError("polygon_outline needs a circle field")
    x = np.asarray(field.values, dtype=float)
    ph = np.asarray(field.phis, dtype=float)
    pts = np.stack([x * np.cos(ph), x * np.sin(ph)], axis=1)
    return np.vstack([pts, pts[:1]])


def outline_csv(points: np.ndarray) -> str:
    rows = ["x,y"] + [f"{p[0]:.17g},{p[1]:.17g}" for p in points]
    return "\n".join(rows) + "\n"
