"""Closed triangle meshes from boundary fields, audits, and OBJ/STL export."""
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFaceError, FileFormatError, InvalidParameterError
from .raygrid import ray_directions


@dataclass
class TriangleMesh:
    vertices: np.ndarray = field(repr=False)
    faces: np.ndarray = field(repr=False)
    rays: int = 0  # contour size when built by triangulate

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def edges(self):
        """Directed edges, one row per face side."""
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def n_edges(self):
        e = np.sort(self.edges(), axis=1)
        return len(np.unique(e, axis=0))

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges() + self.n_faces

    def is_watertight(self):
        e = np.sort(self.edges(), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def is_consistently_oriented(self):
        _, counts = np.unique(self.edges(), axis=0, return_counts=True)
        return bool(np.all(counts == 1))

    def has_valid_indices(self):
        f = self.faces
        in_range = np.all((f >= 0) & (f < self.n_vertices))
        distinct = np.all((f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2]))
        return bool(in_range and distinct)

    def face_normals(self):
        v = self.vertices[self.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.where(norm > 0, norm, 1.0)

    def signed_volume(self):
        v = self.vertices[self.faces]
        return float(np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2]))) / 6.0)


def boundary_points(b, frames):
    """Boundary point per ``(plane, ray)``: origin + radius * ray direction."""
    if len(frames) != b.n:
        raise InvalidParameterError(f"{len(frames)} frames for a field with {b.n} planes")
    origins = np.stack([f.origin for f in frames])
    dirs = ray_directions(frames, b.k)
    return origins[:, None, :] + b.radius[..., None] * dirs


def _check_faces(vertices, faces, plane_of_face):
    v = vertices[faces]
    same = (np.all(v[:, 0] == v[:, 1], axis=1) | np.all(v[:, 1] == v[:, 2], axis=1)
            | np.all(v[:, 0] == v[:, 2], axis=1))
    if same.any():
        i = int(np.argmax(same))
        p = int(plane_of_face[i])
        raise DegenerateFaceError(f"degenerate face {i}: coincident contour points at plane {p}",
                                  plane=p)


def triangulate(points):
    """Open tube connecting consecutive contours, two triangles per quad."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 3 or points.shape[0] < 2 or points.shape[1] < 3:
        raise InvalidParameterError("need an (n>=2, k>=3, 3) array of contour points")
    n, k, _ = points.shape
    ids = np.arange(n * k).reshape(n, k)
    a = ids[:-1]
    b = np.roll(ids, -1, axis=1)[:-1]
    c = ids[1:]
    d = np.roll(ids, -1, axis=1)[1:]
    tri1 = np.stack([a, b, c], axis=-1).reshape(-1, 3)
    tri2 = np.stack([b, d, c], axis=-1).reshape(-1, 3)
    faces = np.stack([tri1, tri2], axis=1).reshape(-1, 3)
    vertices = points.reshape(-1, 3)
    plane = np.repeat(np.arange(n - 1), 2 * k)
    _check_faces(vertices, faces, plane)
    return TriangleMesh(vertices, faces, k)


def cap_ends(mesh, first_origin, last_origin, k=None):
    """Close both ends with fans around the first/last plane origins."""
    k = k or mesh.rays
    nk = mesh.n_vertices
    if nk % k or nk // k < 2:
        raise InvalidParameterError("mesh does not look like an open tube with k rays")
    n = nk // k
    i0, i1 = nk, nk + 1
    r = np.arange(k)
    rn = (r + 1) % k
    first = np.stack([np.full(k, i0), rn, r], axis=-1)
    last_ring = (n - 1) * k
    last = np.stack([np.full(k, i1), last_ring + r, last_ring + rn], axis=-1)
    vertices = np.vstack([mesh.vertices, first_origin, last_origin])
    faces = np.vstack([mesh.faces, first, last])
    _check_faces(vertices, np.vstack([first, last]), np.r_[np.zeros(k), np.full(k, n - 1)])
    closed = TriangleMesh(vertices, faces)
    if closed.signed_volume() < 0:
        closed = TriangleMesh(vertices, faces[:, ::-1])
    return closed


def contour_crossings(points, frames):
    """Plane pairs whose contours cross each other's planes (possible self-intersection)."""
    bad = []
    for p in range(len(frames) - 1):
        f0, f1 = frames[p], frames[p + 1]
        if np.any((points[p + 1] - f0.origin) @ f0.tangent < 0) or \
                np.any((points[p] - f1.origin) @ f1.tangent > 0):
            bad.append(p)
    return bad


def build_mesh(b, frames):
    pts = boundary_points(b, frames)
    bad = contour_crossings(pts, frames)
    if bad:
        warnings.warn(f"contours of plane pairs {bad} cross; mesh may self-intersect")
    return cap_ends(triangulate(pts), frames[0].origin, frames[-1].origin)


def write_obj(mesh, path):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    _write(path, ("\n".join(lines) + "\n").encode())


def read_obj(path):
    verts, faces = [], []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}", path=str(path)) from exc
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return TriangleMesh(np.array(verts), np.array(faces))


def write_stl(mesh, path):
    normals = mesh.face_normals().astype("<f4")
    tri = mesh.vertices[mesh.faces].astype("<f4")
    header = b"fiberseg binary STL".ljust(80, b"\0")
    records = np.zeros(mesh.n_faces, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    records["n"] = normals
    records["v"] = tri
    _write(path, header + struct.pack("<I", mesh.n_faces) + records.tobytes())


def read_stl(path):
    raw = Path(path).read_bytes()
    (count,) = struct.unpack("<I", raw[80:84])
    rec = np.frombuffer(raw[84:84 + 50 * count],
                        dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    return rec["n"].astype(float), rec["v"].astype(float)


def export(mesh, path, fmt=None):
    fmt = (fmt or Path(path).suffix.lstrip(".")).lower()
    if fmt == "obj":
        write_obj(mesh, path)
    elif fmt == "stl":
        write_stl(mesh, path)
    else:
        raise InvalidParameterError(f"unknown mesh format {fmt!r}")


def _write(path, payload):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise FileFormatError(f"cannot write {path}: {exc}", path=str(path)) from exc

