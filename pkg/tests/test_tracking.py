import numpy as np
import pytest

from conftest import uniform_volume
from fiberseg.errors import EmptyBundleError, InvalidRegionError, OutOfBoundsError
from fiberseg.tensor import TensorVolume
from fiberseg.tracking import (PlanarRegion, TrackingParams, restrict_and_crop, seed_points,
                               track_fiber, track_fibers)

Z_PLANE = dict(normal=[0, 0, 1], basis_u=[1, 0, 0], basis_v=[0, 1, 0])


def square(h):
    return [[-h, -h], [h, -h], [h, h], [-h, h]]


def zregion(z, poly):
    return PlanarRegion([0, 0, z], polygon=poly, **Z_PLANE)


class TestSeeding:
    def test_square_density_one(self):
        pts = seed_points(zregion(0.0, square(5.0)), 1.0)
        assert 90 <= len(pts) <= 121
        assert np.all(np.abs(pts[:, :2]) <= 5.0) and np.all(pts[:, 2] == 0.0)

    def test_triangle_points_inside(self):
        region = zregion(2.0, [[0, 0], [1, 0], [0, 1]])
        pts = seed_points(region, 4.0)
        x, y = pts[:, 0], pts[:, 1]
        assert len(pts) > 0
        assert np.all((x >= 0) & (y >= 0) & (x + y <= 1))

    def test_count_matches_monte_carlo_area(self):
        poly = [[0, 0], [6, 1], [7, 5], [3, 8], [-1, 4]]
        region = zregion(0.0, poly)
        rng = np.random.default_rng(0)
        samples = rng.uniform([-1, 0], [7, 8], size=(200000, 2))
        # independent crossing-number test written out in full
        inside = np.zeros(len(samples), bool)
        for i in range(len(poly)):
            (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % len(poly)]
            cond = (y1 > samples[:, 1]) != (y2 > samples[:, 1])
            xc = x1 + (samples[:, 1] - y1) * (x2 - x1) / (y2 - y1 + 1e-300)
            inside ^= cond & (samples[:, 0] < xc)
        area = inside.mean() * 64.0
        for density in (1.0, 4.0):
            count = len(seed_points(region, density))
            assert abs(count - area * density) / (area * density) < 0.15

    def test_invalid_regions(self):
        with pytest.raises(InvalidRegionError):
            zregion(0.0, [[0, 0], [1, 0]])
        with pytest.raises(InvalidRegionError):
            zregion(0.0, [[0, 0], [1, 1], [1, 0], [0, 1]])  # bow tie
        with pytest.raises(InvalidRegionError):
            PlanarRegion([0, 0, 0], [0, 0, 1], [1, 0, 0], [1, 0, 0], square(1))


class TestTracking:
    def test_straight_field_collinear(self):
        vol = uniform_volume()
        fiber = track_fiber(vol, [0.3, -0.2, 0.0])
        assert len(fiber) > 10
        assert np.max(np.abs(fiber[:, 0] - 0.3)) <= 1e-6
        assert np.max(np.abs(fiber[:, 1] + 0.2)) <= 1e-6
        assert np.all(np.diff(fiber[:, 2]) > 0) or np.all(np.diff(fiber[:, 2]) < 0)
        seg = np.linalg.norm(np.diff(fiber, axis=0), axis=1)
        assert np.all(seg > 0) and np.all(seg <= 2 * 0.5)

    def test_torus_stays_near_circle(self, torus):
        spec, vol, _ = torus
        phi = np.radians(45)
        fiber = track_fiber(vol, [40 * np.cos(phi), 40 * np.sin(phi), 0.0],
                            TrackingParams(step_size=0.5))
        rho = np.hypot(fiber[:, 0], fiber[:, 1])
        dev = np.hypot(rho - 40.0, fiber[:, 2])
        assert len(fiber) > 100
        assert dev.max() <= min(spec.tube_radius, 2 * 0.5)

    def test_isotropic_seed_empty(self, torus):
        _, vol, _ = torus
        assert len(track_fiber(vol, [20.0, 20.0, 0.0])) == 0

    def test_seed_out_of_bounds(self, torus):
        _, vol, _ = torus
        with pytest.raises(OutOfBoundsError):
            track_fiber(vol, [500.0, 0.0, 0.0])

    def test_stops_on_turn(self):
        # two half spaces with orthogonal principal directions
        a = uniform_volume((0, 0, 1)).data.copy()
        b = uniform_volume((1, 0, 0)).data
        a[:, :, 25:] = b[:, :, 25:]
        vol = TensorVolume((11, 11, 41), (1, 1, 1), (-5, -5, -20), a)
        fiber = track_fiber(vol, [0, 0, 0], TrackingParams(angle_stop=45.0))
        assert fiber[:, 2].max() < 5.0 + 0.5

    def test_deterministic(self, torus):
        _, vol, _ = torus
        seeds = np.array([[28.0, 28.5, 0.5], [28.5, 28.0, -1.0]])
        a = track_fibers(vol, seeds)
        b = track_fibers(vol, seeds[::-1])[::-1]
        c = [track_fiber(vol, s) for s in seeds]
        for x, y, z in zip(a, b, c):
            assert np.array_equal(x, y) and np.array_equal(x, z)


class TestCrop:
    def test_crop_through_both(self):
        fiber = np.column_stack([np.zeros(41), np.zeros(41), np.linspace(-10, 10, 41)])
        out = restrict_and_crop([fiber], zregion(-3.2, square(2)), zregion(4.1, square(2)))
        assert len(out) == 1
        assert out[0][0, 2] == pytest.approx(-3.2) and out[0][-1, 2] == pytest.approx(4.1)

    def test_oriented_a_to_b(self):
        fiber = np.column_stack([np.zeros(41), np.zeros(41), np.linspace(10, -10, 41)])
        out = restrict_and_crop([fiber], zregion(-3.0, square(2)), zregion(4.0, square(2)))
        assert out[0][0, 2] == pytest.approx(-3.0) and out[0][-1, 2] == pytest.approx(4.0)

    def test_discard_single_region(self):
        good = np.column_stack([np.zeros(21), np.zeros(21), np.linspace(-10, 10, 21)])
        short = np.column_stack([np.zeros(11), np.zeros(11), np.linspace(-10, 0, 11)])
        out = restrict_and_crop([good, short], zregion(-3, square(2)), zregion(4, square(2)))
        assert len(out) == 1

    def test_discard_outside_polygon(self):
        off = np.column_stack([np.full(21, 5.0), np.zeros(21), np.linspace(-10, 10, 21)])
        with pytest.raises(EmptyBundleError):
            restrict_and_crop([off], zregion(-3, square(2)), zregion(4, square(2)))

    def test_straight_length(self):
        vol = uniform_volume()
        fibers = track_fibers(vol, seed_points(zregion(0.0, square(2.0)), 1.0))
        out = restrict_and_crop(fibers, zregion(-8.0, square(3)), zregion(9.0, square(3)))
        for f in out:
            length = np.sum(np.linalg.norm(np.diff(f, axis=0), axis=1))
            assert abs(length - 17.0) <= 0.5
            _, h = zregion(-8.0, square(3)).to_plane(f[0])
            assert h == pytest.approx(0.0, abs=1e-12)
