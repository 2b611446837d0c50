"""Synthetic tensor phantoms with exact ground-truth masks."""
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.spatial import cKDTree

from ._parallel import map_rows
from .errors import InvalidSpecError
from .tensor import TensorVolume, jacobi_eigh, matrix_to_six

DEFAULT_INSIDE = (1.0e-3, 0.2e-3, 0.2e-3)
DEFAULT_OUTSIDE = (0.7e-3, 0.7e-3, 0.7e-3)


@dataclass(frozen=True)
class BinaryMask:
    dims: tuple
    spacing: tuple
    origin: tuple
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        data = np.asarray(self.data, dtype=bool)
        if data.shape != dims:
            raise InvalidSpecError(f"mask shape {data.shape} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "data", data)

    @property
    def count(self):
        return int(self.data.sum())

    def same_grid(self, other):
        return (self.dims == tuple(other.dims)
                and np.allclose(self.spacing, other.spacing)
                and np.allclose(self.origin, other.origin))

    def voxel_centers(self):
        axes = [o + s * np.arange(n) for o, s, n in zip(self.origin, self.spacing, self.dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


class _SpecMixin:
    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidSpecError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    def _check_common(self):
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise InvalidSpecError(f"bad dims {self.dims}")
        if len(self.spacing) != 3 or min(self.spacing) <= 0:
            raise InvalidSpecError(f"spacing must be positive: {self.spacing}")
        lin = self.inside_eigenvalues
        lout = self.outside_eigenvalues
        if len(lin) != 3 or not lin[0] > lin[1] or lin[1] < lin[2] or min(lin) < 0:
            raise InvalidSpecError(f"inside eigenvalues must be anisotropic and sorted: {lin}")
        if len(lout) != 3 or not (lout[0] == lout[1] == lout[2]) or lout[0] < 0:
            raise InvalidSpecError(f"outside eigenvalues must be isotropic: {lout}")
        if self.noise_sigma < 0:
            raise InvalidSpecError("noise_sigma must be >= 0")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise InvalidSpecError("rng_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class TorusPhantomSpec(_SpecMixin):
    """Portion of a torus centred on the world origin, circle in the z=0 plane.

    The swept arc starts on the +x axis and runs counter-clockwise (towards +y)
    for ``arc_span`` degrees.
    """

    major_radius: float = 40.0
    tube_radius: float = 5.0
    arc_span: float = 90.0
    dims: tuple = (57, 57, 17)
    spacing: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (-8.0, -8.0, -8.0)
    inside_eigenvalues: tuple = DEFAULT_INSIDE
    outside_eigenvalues: tuple = DEFAULT_OUTSIDE
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def validate(self):
        self._check_common()
        if not 0 < self.tube_radius < self.major_radius:
            raise InvalidSpecError("need 0 < tube_radius < major_radius")
        if not 0 < self.arc_span <= 360:
            raise InvalidSpecError("arc_span must lie in (0, 360]")


@dataclass(frozen=True)
class CurvedTubePhantomSpec(_SpecMixin):
    """Tube around a cubic Bezier curve given by four control points (mm)."""

    control_points: tuple = ((0.0, 0.0, -25.0), (0.0, 0.0, -8.0), (0.0, 0.0, 8.0), (0.0, 0.0, 25.0))
    tube_radius: float = 5.0
    dims: tuple = (25, 25, 57)
    spacing: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (-12.0, -12.0, -28.0)
    inside_eigenvalues: tuple = DEFAULT_INSIDE
    outside_eigenvalues: tuple = DEFAULT_OUTSIDE
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def validate(self):
        self._check_common()
        cp = np.asarray(self.control_points, dtype=float)
        if cp.shape != (4, 3) or not np.all(np.isfinite(cp)):
            raise InvalidSpecError("control_points must be four 3D points")
        if self.tube_radius <= 0:
            raise InvalidSpecError("tube_radius must be positive")
        t = np.linspace(0.0, 1.0, 1001)
        d1 = bezier(cp, t, 1)
        if np.min(np.linalg.norm(d1, axis=1)) < 1e-9:
            raise InvalidSpecError("curve has a stationary point")
        if self.tube_radius >= np.min(curvature_radius(cp, t)):
            raise InvalidSpecError("tube_radius reaches the curve's radius of curvature")


# --- curve helpers ---------------------------------------------------------

_BERN = np.array([[1, 0, 0, 0], [-3, 3, 0, 0], [3, -6, 3, 0], [-1, 3, -3, 1]], dtype=float)


def bezier(cp, t, derivative=0):
    """Cubic Bezier (or its first/second derivative) at parameters ``t``."""
    t = np.asarray(t, dtype=float)[:, None]
    coef = _BERN @ np.asarray(cp, dtype=float)
    if derivative == 0:
        return coef[0] + t * (coef[1] + t * (coef[2] + t * coef[3]))
    if derivative == 1:
        return coef[1] + t * (2 * coef[2] + 3 * t * coef[3])
    return 2 * coef[2] + 6 * t * coef[3]


def curvature_radius(cp, t):
    d1 = bezier(cp, t, 1)
    d2 = bezier(cp, t, 2)
    speed = np.linalg.norm(d1, axis=1)
    cross = np.linalg.norm(np.cross(d1, d2), axis=1)
    with np.errstate(divide="ignore"):
        return np.where(cross > 0, speed ** 3 / np.where(cross > 0, cross, 1.0), np.inf)


def nearest_on_bezier(cp, points, samples=4001, newton_steps=8):
    """Parameter and position of the closest curve point for each query point."""
    ts = np.linspace(0.0, 1.0, samples)
    _, idx = cKDTree(bezier(cp, ts)).query(points)
    t = ts[idx]
    for _ in range(newton_steps):
        c, d1, d2 = bezier(cp, t), bezier(cp, t, 1), bezier(cp, t, 2)
        diff = c - points
        g = np.sum(diff * d1, axis=1)
        h = np.sum(d1 * d1, axis=1) + np.sum(diff * d2, axis=1)
        step = np.where(h > 0, g / np.where(h > 0, h, 1.0), 0.0)
        t = np.clip(t - step, 0.0, 1.0)
    return t, bezier(cp, t)


# --- noise ---------------------------------------------------------------

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix(x):
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def voxel_normals(seed, index, n_components=6):
    """Standard normal draws keyed by ``(seed, ix, iy, iz, component)``.

    ``index`` is an ``(N, 3)`` integer array. Each value depends only on its
    own key, so the noise field is independent of evaluation order.
    """
    index = np.asarray(index, dtype=np.uint64)
    h = _splitmix(np.full(len(index), np.uint64(seed)))
    for axis in range(3):
        h = _splitmix(h ^ index[:, axis])
    out = np.empty((len(index), n_components))
    scale = 2.0 ** -53
    for c in range(n_components):
        a = _splitmix(h ^ np.uint64(2 * c + 1))
        b = _splitmix(h ^ np.uint64(2 * c + 2))
        u1 = ((a >> np.uint64(11)).astype(np.float64) + 0.5) * scale
        u2 = ((b >> np.uint64(11)).astype(np.float64) + 0.5) * scale
        out[:, c] = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return out


def _floor_negative(six):
    evals, evecs = jacobi_eigh(six)
    bad = evals[:, 2] < 0
    if bad.any():
        ev = np.maximum(evals[bad], 0.0)
        vecs = evecs[bad]
        six = six.copy()
        six[bad] = matrix_to_six(np.einsum("nik,nk,njk->nij", vecs, ev, vecs))
    return six


def _assemble(spec, inside, e1, e2):
    """Build the tensor array from an inside mask and per-voxel frames."""
    shape = inside.shape
    lin = np.asarray(spec.inside_eigenvalues, dtype=float)
    lout = float(spec.outside_eigenvalues[0])
    e1 = e1.reshape(-1, 3)
    e2 = e2.reshape(-1, 3)
    e3 = np.cross(e1, e2)
    flat_in = inside.reshape(-1)
    mats = np.zeros((flat_in.size, 3, 3))
    mats[:] = lout * np.eye(3)
    sel = np.nonzero(flat_in)[0]
    if sel.size:
        frame = np.stack([e1[sel], e2[sel], e3[sel]], axis=-1)
        mats[sel] = np.einsum("nik,k,njk->nij", frame, lin, frame)
    six = matrix_to_six(mats)
    if spec.noise_sigma > 0:
        index = np.stack(np.unravel_index(np.arange(flat_in.size), shape), axis=-1)
        six = six + spec.noise_sigma * lin[0] * voxel_normals(spec.rng_seed, index)
        six = map_rows(_floor_negative, (six,))
    return six.reshape(shape + (6,))


def torus_inside(spec, points):
    """Analytic point-in-torus-portion predicate plus local tangent/radial axes."""
    p = np.asarray(points, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    rho = np.hypot(x, y)
    phi = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    dist = np.hypot(rho - spec.major_radius, z)
    span = np.radians(spec.arc_span)
    inside = (dist <= spec.tube_radius) & ((phi <= span) | (spec.arc_span >= 360.0))
    tangent = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    radial = np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)
    return inside, tangent, radial


def generate_torus_phantom(spec=None):
    """Tensor volume and ground-truth mask for a torus portion.

    Inside voxels carry ``inside_eigenvalues`` with the principal axis along
    the centre-circle tangent; everything else is isotropic.
    """
    spec = spec or TorusPhantomSpec()
    spec.validate()
    mask_grid = BinaryMask(spec.dims, spec.spacing, spec.origin, np.zeros(tuple(spec.dims), bool))
    centers = mask_grid.voxel_centers()
    inside, tangent, radial = torus_inside(spec, centers)
    data = _assemble(spec, inside, tangent, radial)
    vol = TensorVolume(spec.dims, spec.spacing, spec.origin, data)
    return vol, BinaryMask(spec.dims, spec.spacing, spec.origin, inside)


def curved_tube_inside(spec, points):
    """Point-in-tube predicate for the Bezier tube with flat end caps."""
    cp = np.asarray(spec.control_points, dtype=float)
    p = np.asarray(points, dtype=float)
    shape = p.shape[:-1]
    flat = p.reshape(-1, 3)
    t, foot = nearest_on_bezier(cp, flat)
    d1 = bezier(cp, t, 1)
    tangent = d1 / np.linalg.norm(d1, axis=1, keepdims=True)
    offset = flat - foot
    dist = np.linalg.norm(offset, axis=1)
    along = np.abs(np.sum(offset * tangent, axis=1))
    at_end = (t <= 0.0) | (t >= 1.0)
    inside = (dist <= spec.tube_radius) & (~at_end | (along <= 1e-6))
    # a perpendicular axis for the tensor frame; any choice works for equal minor eigenvalues
    ref = np.where(np.abs(tangent[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    normal = ref - np.sum(ref * tangent, axis=1, keepdims=True) * tangent
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    return inside.reshape(shape), tangent.reshape(shape + (3,)), normal.reshape(shape + (3,))


def generate_curved_tube_phantom(spec=None):
    """Like :func:`generate_torus_phantom` for a user-defined cubic centre curve."""
    spec = spec or CurvedTubePhantomSpec()
    spec.validate()
    mask_grid = BinaryMask(spec.dims, spec.spacing, spec.origin, np.zeros(tuple(spec.dims), bool))
    inside, tangent, normal = curved_tube_inside(spec, mask_grid.voxel_centers())
    data = _assemble(spec, inside, tangent, normal)
    vol = TensorVolume(spec.dims, spec.spacing, spec.origin, data)
    return vol, BinaryMask(spec.dims, spec.spacing, spec.origin, inside)


def phantom_from_dict(d):
    """Dispatch on ``kind`` ("torus" or "curved_tube")."""
    d = dict(d)
    kind = d.pop("kind", "torus")
    if kind == "torus":
        return generate_torus_phantom(TorusPhantomSpec.from_dict(_tuplify(d)))
    if kind == "curved_tube":
        return generate_curved_tube_phantom(CurvedTubePhantomSpec.from_dict(_tuplify(d)))
    raise InvalidSpecError(f"unknown phantom kind {kind!r}")


def _tuplify(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        out[k] = v
    return out
