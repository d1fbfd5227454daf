"""Triangular surface meshes and the uniform time grid.

The spatial mesh is a closed, oriented 2-manifold of planar triangles.
Triangles are stored counter-clockwise as seen from outside, so the unit
normal is the normalized cross product of the edge vectors and points out
of the enclosed body.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(Exception):
    """Invalid mesh data (bad indices, degenerate or non-manifold input)."""


class MeshParseError(MeshError):
    """Text mesh file could not be parsed; carries a 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of (0, T) into n_steps intervals of width step."""

    end_time: float
    n_steps: int

    def __post_init__(self):
        if self.end_time <= 0:
            raise ValueError("end_time must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def step(self) -> float:
        return self.end_time / self.n_steps

    def node(self, i: int) -> float:
        return i * self.step

    def bisect(self) -> "TimeGrid":
        return TimeGrid(self.end_time, 2 * self.n_steps)


@dataclass
class SurfaceMesh:
    """Closed triangular surface mesh with per-element geometry.

    vertices: (N_x, 3) float array.
    triangles: (E_x, 3) int array, CCW from outside.
    Derived per-triangle data (areas, normals, centroids, diameters) is
    computed once at construction; instances are treated as immutable.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)
    diameters: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must have shape (N_x, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (E_x, 3)")
        n = len(self.vertices)
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=-1) >= n:
            raise MeshError("triangle vertex index out of range")
        for tri in self.triangles:
            if len(set(tri.tolist())) != 3:
                raise MeshError(f"degenerate triangle {tri.tolist()}")
        v0 = self.vertices[self.triangles[:, 0]]
        e1 = self.vertices[self.triangles[:, 1]] - v0
        e2 = self.vertices[self.triangles[:, 2]] - v0
        cross = np.cross(e1, e2)
        nrm = np.linalg.norm(cross, axis=1)
        if np.any(nrm <= 0):
            raise MeshError("zero-area triangle")
        self.areas = 0.5 * nrm
        self.normals = cross / nrm[:, None]
        self.centroids = (
            v0 + self.vertices[self.triangles[:, 1]] + self.vertices[self.triangles[:, 2]]
        ) / 3.0
        d01 = np.linalg.norm(e1, axis=1)
        d02 = np.linalg.norm(e2, axis=1)
        d12 = np.linalg.norm(e2 - e1, axis=1)
        self.diameters = np.maximum(np.maximum(d01, d02), d12)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def diameter(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def triangle_vertices(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (E_x, 3, 3)."""
        return self.vertices[self.triangles]

    def edge_counts(self) -> dict:
        counts: dict = {}
        for a, b, c in self.triangles.tolist():
            for e in ((a, b), (b, c), (c, a)):
                key = (min(e), max(e))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_admissible(self) -> bool:
        """True iff every edge is shared by exactly two triangles."""
        return all(v == 2 for v in self.edge_counts().values())


def generate_cube_surface(subdivisions_per_edge: int, half_width: float = 1.0) -> SurfaceMesh:
    """Triangulated surface of the cube [-w, w]^3.

    Each face is an n-by-n grid of squares split into two triangles, giving
    12 n^2 congruent triangles and 6 n^2 + 2 vertices in total.
    """
    n = int(subdivisions_per_edge)
    if n < 1:
        raise ValueError("subdivisions_per_edge must be >= 1")
    w = float(half_width)
    if w <= 0:
        raise ValueError("half_width must be positive")

    vert_index: dict = {}
    vertices: list = []

    def vid(i: int, j: int, k: int) -> int:
        key = (i, j, k)
        if key not in vert_index:
            vert_index[key] = len(vertices)
            vertices.append((w * (2.0 * i / n - 1.0), w * (2.0 * j / n - 1.0), w * (2.0 * k / n - 1.0)))
        return vert_index[key]

    triangles: list = []

    # Faces described by an origin corner (lattice coords) and two in-face
    # axis steps (du, dv) chosen so that du x dv points outward.
    faces = [
        ((n, 0, 0), (0, 1, 0), (0, 0, 1)),   # +x
        ((0, 0, 0), (0, 0, 1), (0, 1, 0)),   # -x
        ((0, n, 0), (0, 0, 1), (1, 0, 0)),   # +y
        ((0, 0, 0), (1, 0, 0), (0, 0, 1)),   # -y
        ((0, 0, n), (1, 0, 0), (0, 1, 0)),   # +z
        ((0, 0, 0), (0, 1, 0), (1, 0, 0)),   # -z
    ]
    for origin, du, dv in faces:
        for a in range(n):
            for b in range(n):
                p00 = vid(*(origin[m] + a * du[m] + b * dv[m] for m in range(3)))
                p10 = vid(*(origin[m] + (a + 1) * du[m] + b * dv[m] for m in range(3)))
                p01 = vid(*(origin[m] + a * du[m] + (b + 1) * dv[m] for m in range(3)))
                p11 = vid(*(origin[m] + (a + 1) * du[m] + (b + 1) * dv[m] for m in range(3)))
                triangles.append((p00, p10, p11))
                triangles.append((p00, p11, p01))

    return SurfaceMesh(np.array(vertices), np.array(triangles))


def refine(mesh: SurfaceMesh) -> SurfaceMesh:
    """Quadrisect every triangle through its edge midpoints.

    Midpoint vertices are deduplicated by the (sorted) parent index pair,
    so the refinement is deterministic and independent of triangle order.
    """
    if not mesh.is_admissible():
        raise MeshError("refine requires a closed 2-manifold mesh")
    vertices = [tuple(p) for p in mesh.vertices.tolist()]
    midpoint: dict = {}

    def mid(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in midpoint:
            midpoint[key] = len(vertices)
            pa = mesh.vertices[a]
            pb = mesh.vertices[b]
            vertices.append(tuple(0.5 * (pa + pb)))
        return midpoint[key]

    triangles = []
    for a, b, c in mesh.triangles.tolist():
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        triangles.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])

    return SurfaceMesh(np.array(vertices), np.array(triangles))


MESH_FORMAT_HEADER = "heatbem-mesh 1"


def save_mesh(mesh: SurfaceMesh, path) -> None:
    """Write the text mesh format (see load_mesh for the grammar)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MESH_FORMAT_HEADER + "\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for p in mesh.vertices.tolist():
            fh.write(f"{p[0]!r} {p[1]!r} {p[2]!r}\n")
        fh.write(f"triangles {mesh.n_triangles}\n")
        for t in mesh.triangles.tolist():
            fh.write(f"{t[0]} {t[1]} {t[2]}\n")


def load_mesh(path) -> SurfaceMesh:
    """Read the text mesh format.

    Grammar: header line ``heatbem-mesh 1``; ``vertices <N>``; N lines of
    three floats; ``triangles <E>``; E lines of three 0-based indices.
    Lines starting with ``#`` are ignored. Raises MeshParseError with the
    offending line number on malformed input.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = [(i + 1, s.strip()) for i, s in enumerate(raw)]
    lines = [(no, s) for no, s in lines if s and not s.startswith("#")]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise MeshParseError("unexpected end of file", lines[-1][0] if lines else 0)
        item = lines[pos]
        pos += 1
        return item

    no, s = take()
    if s != MESH_FORMAT_HEADER:
        raise MeshParseError(f"expected header {MESH_FORMAT_HEADER!r}", no)
    no, s = take()
    parts = s.split()
    if len(parts) != 2 or parts[0] != "vertices":
        raise MeshParseError("expected 'vertices <count>'", no)
    try:
        n_vert = int(parts[1])
    except ValueError:
        raise MeshParseError("vertex count is not an integer", no)
    if n_vert < 3:
        raise MeshParseError("empty or too-small vertex section", no)
    vertices = np.empty((n_vert, 3))
    for i in range(n_vert):
        no, s = take()
        parts = s.split()
        if len(parts) != 3:
            raise MeshParseError("expected three coordinates", no)
        try:
            vertices[i] = [float(x) for x in parts]
        except ValueError:
            raise MeshParseError("coordinate is not a number", no)
    no, s = take()
    parts = s.split()
    if len(parts) != 2 or parts[0] != "triangles":
        raise MeshParseError("expected 'triangles <count>'", no)
    try:
        n_tri = int(parts[1])
    except ValueError:
        raise MeshParseError("triangle count is not an integer", no)
    triangles = np.empty((n_tri, 3), dtype=np.int64)
    for i in range(n_tri):
        no, s = take()
        parts = s.split()
        if len(parts) != 3:
            raise MeshParseError("expected three vertex indices", no)
        try:
            idx = [int(x) for x in parts]
        except ValueError:
            raise MeshParseError("index is not an integer", no)
        if any(j < 0 or j >= n_vert for j in idx):
            raise MeshParseError("index out of range", no)
        triangles[i] = idx
    return SurfaceMesh(vertices, triangles)
