import struct
import warnings

import numpy as np
import pytest

from fiberseg.centerline import build_frames
from fiberseg.errors import DegenerateFaceError, InvalidParameterError
from fiberseg.mesh import (TriangleMesh, boundary_points, build_mesh, cap_ends, export, read_obj,
                           read_stl, triangulate, write_obj, write_stl)
from fiberseg.ray_seg import BoundaryField


def straight_frames(n, length=10.0):
    z = np.linspace(0.0, length, n)
    return build_frames(np.stack([np.zeros(n), np.zeros(n), z], axis=1))


def cylinder(n=30, k=36, radius=4.0, length=10.0, d=0.5, m=40):
    frames = straight_frames(n, length)
    b = BoundaryField(np.full((n, k), radius), d, m)
    return build_mesh(b, frames), frames


class TestTopology:
    def test_minimal_counts(self):
        mesh, _ = cylinder(n=2, k=3)
        assert (mesh.n_vertices, mesh.n_faces, mesh.n_edges()) == (8, 12, 18)
        assert mesh.euler_characteristic() == 2

    def test_default_counts(self):
        mesh, _ = cylinder()
        assert mesh.n_faces == 2 * 29 * 36 + 2 * 36
        assert mesh.n_vertices == 30 * 36 + 2
        assert mesh.euler_characteristic() == 2

    def test_closed_and_oriented(self):
        mesh, _ = cylinder()
        assert mesh.is_watertight() and mesh.is_consistently_oriented() and mesh.has_valid_indices()

    def test_open_tube_boundary(self):
        frames = straight_frames(5)
        tube = triangulate(boundary_points(BoundaryField(np.full((5, 7), 2.0), 0.5, 10), frames))
        e = np.sort(tube.edges(), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        assert np.sum(counts == 1) == 2 * 7 and np.all(counts <= 2)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_radii_still_closed(self, seed):
        rng = np.random.default_rng(seed)
        frames = straight_frames(12)
        b = BoundaryField(rng.uniform(0.5, 5.0, (12, 9)), 0.5, 10)
        mesh = build_mesh(b, frames)
        assert mesh.is_watertight() and mesh.is_consistently_oriented()
        assert mesh.signed_volume() > 0


class TestGeometry:
    def test_normals_outward(self):
        mesh, _ = cylinder()
        side = mesh.faces[: 2 * 29 * 36]
        centroid = mesh.vertices[side].mean(axis=1)
        radial = centroid.copy()
        radial[:, 2] = 0.0
        normals = mesh.face_normals()[: len(side)]
        assert np.all(np.sum(normals * radial, axis=1) > 0)

    @pytest.mark.parametrize("k", [12, 36, 72])
    def test_volume(self, k):
        R, L = 4.0, 10.0
        mesh, _ = cylinder(k=k, radius=R, length=L)
        exact = np.pi * R ** 2 * L
        assert abs(mesh.signed_volume() - exact) / exact <= 2 * (2 * np.pi / k) ** 2

    def test_degenerate_face(self):
        b = BoundaryField(np.zeros((4, 6)), 0.5, 10)
        with pytest.raises(DegenerateFaceError):
            build_mesh(b, straight_frames(4))

    def test_bad_input(self):
        with pytest.raises(InvalidParameterError):
            triangulate(np.zeros((1, 5, 3)))

    def test_crossing_contours_warn(self):
        frames = straight_frames(3, length=0.2)
        frames = [frames[0], frames[1], frames[2]]
        b = BoundaryField(np.full((3, 8), 3.0), 0.5, 10)
        # tilt the middle plane's contour by swapping frames' tangent order
        from fiberseg.centerline import PlaneFrame
        f = frames[1]
        tilted = PlaneFrame(f.origin, f.tangent, f.u * np.cos(1.2) + f.tangent * np.sin(1.2), f.v)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            build_mesh(b, [frames[0], tilted, frames[2]])
        assert caught


class TestExport:
    def test_obj_roundtrip(self, tmp_path):
        mesh, _ = cylinder(n=4, k=6)
        write_obj(mesh, tmp_path / "m.obj")
        back = read_obj(tmp_path / "m.obj")
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.faces, mesh.faces)

    def test_obj_lines_tetrahedron(self, tmp_path):
        v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
        f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
        mesh = TriangleMesh(v, f)
        assert mesh.is_watertight() and mesh.signed_volume() == pytest.approx(1 / 6)
        export(mesh, tmp_path / "t.obj")
        lines = (tmp_path / "t.obj").read_text().splitlines()
        assert lines[:2] == ["v 0.0 0.0 0.0", "v 1.0 0.0 0.0"]
        assert lines[4:] == ["f 1 3 2", "f 1 2 4", "f 1 4 3", "f 2 3 4"]

    def test_stl_size_and_content(self, tmp_path):
        mesh, _ = cylinder(n=5, k=8)
        write_stl(mesh, tmp_path / "m.stl")
        raw = (tmp_path / "m.stl").read_bytes()
        assert len(raw) == 84 + 50 * mesh.n_faces
        assert struct.unpack("<I", raw[80:84])[0] == mesh.n_faces
        normals, tri = read_stl(tmp_path / "m.stl")
        assert np.allclose(tri, mesh.vertices[mesh.faces], atol=1e-5)
        assert np.allclose(normals, mesh.face_normals(), atol=1e-6)

    def test_unknown_format(self, tmp_path):
        mesh, _ = cylinder(n=2, k=3)
        with pytest.raises(InvalidParameterError):
            export(mesh, tmp_path / "m.ply")


def test_cap_ends_flips_mirrored_geometry():
    frames = straight_frames(3)
    pts = boundary_points(BoundaryField(np.full((3, 5), 2.0), 0.5, 10), frames)
    pts[..., 0] *= -1.0
    tube = triangulate(pts)
    raw = TriangleMesh(np.vstack([tube.vertices, frames[0].origin, frames[-1].origin]),
                       cap_ends(triangulate(boundary_points(
                           BoundaryField(np.full((3, 5), 2.0), 0.5, 10), frames)),
                           frames[0].origin, frames[-1].origin).faces)
    closed = cap_ends(tube, frames[0].origin, frames[-1].origin)
    assert raw.signed_volume() < 0
    assert closed.signed_volume() > 0 and closed.is_consistently_oriented()
