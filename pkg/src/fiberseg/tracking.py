"""Deterministic streamline tracking, seeding from planar regions, and cropping."""
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBundleError, InvalidParameterError, InvalidRegionError, OutOfBoundsError
from .tensor import sample_fa_and_direction


@dataclass(frozen=True)
class PlanarRegion:
    """Polygon lying in the plane through ``origin`` spanned by ``basis_u``/``basis_v``."""

    origin: np.ndarray
    normal: np.ndarray
    basis_u: np.ndarray
    basis_v: np.ndarray
    polygon: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("origin", "normal", "basis_u", "basis_v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        poly = np.asarray(self.polygon, dtype=float)
        object.__setattr__(self, "polygon", poly)
        self.validate()

    def validate(self):
        n, u, v = self.normal, self.basis_u, self.basis_v
        for vec in (n, u, v):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-6:
                raise InvalidRegionError("region axes must be unit vectors")
        if max(abs(n @ u), abs(n @ v), abs(u @ v)) > 1e-6:
            raise InvalidRegionError("region axes must be mutually orthogonal")
        poly = self.polygon
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise InvalidRegionError("polygon needs at least three 2D vertices")
        if abs(polygon_area(poly)) < 1e-12:
            raise InvalidRegionError("polygon has zero area")
        if _self_intersects(poly):
            raise InvalidRegionError("polygon is self-intersecting")

    def to_plane(self, points):
        """3D points -> in-plane (u, v) coordinates and signed height along the normal."""
        rel = np.asarray(points, dtype=float) - self.origin
        return np.stack([rel @ self.basis_u, rel @ self.basis_v], axis=-1), rel @ self.normal

    def to_world(self, uv):
        uv = np.asarray(uv, dtype=float)
        return self.origin + uv[..., :1] * self.basis_u + uv[..., 1:] * self.basis_v

    def contains_uv(self, uv):
        return points_in_polygon(uv, self.polygon)

    @classmethod
    def from_dict(cls, d):
        return cls(d["origin"], d["normal"], d["basis_u"], d["basis_v"], d["polygon"])

    def to_dict(self):
        return {"origin": self.origin.tolist(), "normal": self.normal.tolist(),
                "basis_u": self.basis_u.tolist(), "basis_v": self.basis_v.tolist(),
                "polygon": self.polygon.tolist()}


@dataclass(frozen=True)
class TrackingParams:
    step_size: float = 0.5
    fa_stop: float = 0.15
    angle_stop: float = 45.0
    max_steps: int = 2000
    seed_density: float = 4.0

    def __post_init__(self):
        if not self.step_size > 0:
            raise InvalidParameterError("step_size must be positive")
        if not int(self.max_steps) > 0:
            raise InvalidParameterError("max_steps must be positive")
        if not 0.0 <= self.fa_stop <= 1.0:
            raise InvalidParameterError("fa_stop must lie in [0, 1]")
        if not self.seed_density > 0:
            raise InvalidParameterError("seed_density must be positive")


def polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return (orient(p1, p2, q1) * orient(p1, p2, q2) < 0
            and orient(q1, q2, p1) * orient(q1, q2, p2) < 0)


def _self_intersects(poly):
    n = len(poly)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                return True
    return False


def points_in_polygon(uv, poly):
    """Even-odd rule point-in-polygon for ``(..., 2)`` points."""
    uv = np.asarray(uv, dtype=float)
    x, y = uv[..., 0], uv[..., 1]
    inside = np.zeros(x.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        straddle = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddle & (x < xcross)
    return inside


def seed_points(region, density):
    """Regular grid of seeds with spacing ``1/sqrt(density)`` inside the polygon."""
    if not density > 0:
        raise InvalidParameterError("seed density must be positive")
    region.validate()
    h = 1.0 / np.sqrt(density)
    lo = region.polygon.min(axis=0)
    hi = region.polygon.max(axis=0)
    # grid anchored on the polygon's bounding-box centre so symmetric polygons get symmetric seeds
    mid = 0.5 * (lo + hi)
    nu = int(np.floor((hi[0] - mid[0]) / h))
    nv = int(np.floor((hi[1] - mid[1]) / h))
    gu = mid[0] + h * np.arange(-nu, nu + 1)
    gv = mid[1] + h * np.arange(-nv, nv + 1)
    uv = np.stack(np.meshgrid(gu, gv, indexing="ij"), axis=-1).reshape(-1, 2)
    uv = uv[region.contains_uv(uv)]
    return region.to_world(uv)


def _integrate(vol, starts, directions, params):
    """Advance many half-streamlines in lock-step; returns a list of point arrays."""
    n = len(starts)
    h = float(params.step_size)
    cos_stop = np.cos(np.radians(params.angle_stop))
    pos = starts.copy()
    prev = directions.copy()
    active = np.ones(n, dtype=bool)
    paths = [[] for _ in range(n)]
    for _ in range(int(params.max_steps)):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        _, e1, inside = sample_fa_and_direction(vol, pos[idx])
        dots = np.sum(e1 * prev[idx], axis=1)
        e1 = np.where(dots[:, None] < 0, -e1, e1)
        turn_ok = np.abs(dots) >= cos_stop
        nxt = pos[idx] + h * e1
        fa_next, _, in_next = sample_fa_and_direction(vol, nxt)
        ok = inside & turn_ok & in_next & (fa_next >= params.fa_stop)
        stopped = idx[~ok]
        active[stopped] = False
        go = idx[ok]
        pos[go] = nxt[ok]
        prev[go] = e1[ok]
        for i, p in zip(go, nxt[ok]):
            paths[i].append(p)
    return [np.array(p).reshape(-1, 3) for p in paths]


def track_fibers(vol, seeds, params=None):
    """Bidirectional Euler tracking from every seed.

    Seeds whose FA is below ``fa_stop`` yield empty streamlines. Each result
    runs backward half (reversed), seed, forward half.
    """
    params = params or TrackingParams()
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if len(seeds) == 0:
        return []
    fa, e1, inside = sample_fa_and_direction(vol, seeds)
    if not inside.all():
        bad = seeds[~inside][0]
        raise OutOfBoundsError(f"seed {tuple(bad)} lies outside the volume")
    live = np.nonzero(fa >= params.fa_stop)[0]
    fibers = [np.empty((0, 3)) for _ in range(len(seeds))]
    if live.size == 0:
        return fibers
    starts = np.concatenate([seeds[live], seeds[live]])
    dirs = np.concatenate([e1[live], -e1[live]])
    halves = _integrate(vol, starts, dirs, params)
    m = live.size
    for k, i in enumerate(live):
        fwd, back = halves[k], halves[m + k]
        fibers[i] = np.concatenate([back[::-1], seeds[i:i + 1], fwd])
    return fibers


def track_fiber(vol, seed, params=None):
    return track_fibers(vol, np.asarray(seed, dtype=float).reshape(1, 3), params)[0]


def _crossings(fiber, region):
    """Parameters ``s`` (segment index + fraction) where the polyline crosses the polygon."""
    if len(fiber) < 2:
        return []
    _, height = region.to_plane(fiber)
    h0, h1 = height[:-1], height[1:]
    out = []
    cand = np.nonzero(((h0 <= 0) & (h1 > 0)) | ((h0 >= 0) & (h1 < 0)) | ((h0 == 0) & (h1 == 0)))[0]
    for i in cand:
        denom = h0[i] - h1[i]
        f = 0.0 if denom == 0 else h0[i] / denom
        point = fiber[i] + f * (fiber[i + 1] - fiber[i])
        uv, _ = region.to_plane(point)
        if region.contains_uv(uv[None])[0]:
            out.append((i + f, point))
    return out


def _sub_polyline(fiber, sa, pa, sb, pb):
    """Polyline from parameter ``sa`` to ``sb`` with exact end points."""
    if sa <= sb:
        inner = fiber[int(np.floor(sa)) + 1:int(np.ceil(sb))]
        pts = [pa, *inner, pb]
    else:
        inner = fiber[int(np.floor(sb)) + 1:int(np.ceil(sa))][::-1]
        pts = [pa, *inner, pb]
    out = [pts[0]]
    for p in pts[1:]:
        if np.any(p != out[-1]):
            out.append(p)
    return np.array(out)


def restrict_and_crop(fibers, region_a, region_b):
    """Keep fibers crossing both regions, cropped between them and oriented a -> b.

    When a fiber crosses a region several times the pair of crossings closest
    in arc parameter is used.
    """
    region_a.validate()
    region_b.validate()
    kept = []
    for fiber in fibers:
        ca = _crossings(fiber, region_a)
        cb = _crossings(fiber, region_b)
        if not ca or not cb:
            continue
        (sa, pa), (sb, pb) = min(((a, b) for a in ca for b in cb),
                                 key=lambda ab: abs(ab[0][0] - ab[1][0]))
        if sa == sb:
            continue
        piece = _sub_polyline(fiber, sa, pa, sb, pb)
        if len(piece) >= 2:
            kept.append(piece)
    if not kept:
        raise EmptyBundleError("no fiber passes through both include regions")
    return kept


def streamlines_to_json(fibers):
    return [np.asarray(f).tolist() for f in fibers]


def streamlines_from_json(data):
    return [np.asarray(f, dtype=float).reshape(-1, 3) for f in data]
