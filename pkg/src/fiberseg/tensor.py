"""Symmetric 3x3 diffusion tensors: eigensystems, FA, angles and sampling.

Tensors are stored as six unique components in the order
``dxx, dyy, dzz, dxy, dxz, dyz``. Batched routines accept arrays whose last
axis holds those six numbers and work element-wise, so the result for one
tensor never depends on what else is in the batch.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDirectionError, InvalidTensorError, OutOfBoundsError

COMPONENTS = ("dxx", "dyy", "dzz", "dxy", "dxz", "dyz")

#: Directions of tensors with FA below this are not trusted.
FA_EPSILON = 1e-3

_JACOBI_TOL = 1e-13
_MAX_SWEEPS = 50
# (p, q, r): pivot pair and the remaining index
_PIVOTS = ((0, 1, 2), (0, 2, 1), (1, 2, 0))


@dataclass(frozen=True)
class DiffusionTensor:
    dxx: float
    dyy: float
    dzz: float
    dxy: float
    dxz: float
    dyz: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise InvalidTensorError(f"non-finite tensor component in {self}")

    @classmethod
    def from_array(cls, six):
        return cls(*(float(x) for x in np.asarray(six, dtype=float).reshape(6)))

    @classmethod
    def from_matrix(cls, mat):
        m = np.asarray(mat, dtype=float)
        return cls(m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2])

    def as_array(self):
        return np.array([self.dxx, self.dyy, self.dzz, self.dxy, self.dxz, self.dyz])

    def matrix(self):
        return six_to_matrix(self.as_array())


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending with matching unit eigenvectors."""

    lambda1: float
    lambda2: float
    lambda3: float
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @property
    def eigenvalues(self):
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    @property
    def eigenvectors(self):
        """Eigenvectors as matrix columns."""
        return np.column_stack([self.e1, self.e2, self.e3])


@dataclass(frozen=True)
class TensorVolume:
    """Regular grid of tensors, ``data[ix, iy, iz] -> six components``.

    Voxel ``(i, j, k)`` has its center at ``origin + (i, j, k) * spacing``.
    """

    dims: tuple
    spacing: tuple
    origin: tuple
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if len(dims) != 3 or min(dims) < 1:
            raise InvalidTensorError(f"bad volume dims {self.dims}")
        if len(spacing) != 3 or min(spacing) <= 0:
            raise InvalidTensorError(f"volume spacing must be positive, got {self.spacing}")
        data = np.asarray(self.data, dtype=float)
        if data.shape != dims + (6,):
            raise InvalidTensorError(f"data shape {data.shape} does not match dims {dims}")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "data", data)

    @property
    def upper(self):
        """Position of the last voxel center."""
        return np.asarray(self.origin) + (np.asarray(self.dims) - 1) * np.asarray(self.spacing)

    def voxel_centers(self):
        """All voxel centers as an ``(nx, ny, nz, 3)`` array."""
        axes = [o + s * np.arange(n) for o, s, n in zip(self.origin, self.spacing, self.dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def contains(self, points, tol=1e-9):
        p = np.asarray(points, dtype=float)
        lo = np.asarray(self.origin) - tol
        hi = self.upper + tol
        return np.all((p >= lo) & (p <= hi), axis=-1)


def six_to_matrix(six):
    six = np.asarray(six, dtype=float)
    xx, yy, zz, xy, xz, yz = np.moveaxis(six, -1, 0)
    rows = [np.stack([xx, xy, xz], -1), np.stack([xy, yy, yz], -1), np.stack([xz, yz, zz], -1)]
    return np.stack(rows, axis=-2)


def matrix_to_six(mat):
    m = np.asarray(mat, dtype=float)
    return np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 2, 2],
                     m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]], axis=-1)


def jacobi_eigh(six):
    """Cyclic Jacobi eigendecomposition of a batch of symmetric tensors.

    Parameters
    ----------
    six : array_like, shape (..., 6)

    Returns
    -------
    evals : ndarray, shape (..., 3)
        Sorted descending.
    evecs : ndarray, shape (..., 3, 3)
        Column ``i`` is the eigenvector of ``evals[..., i]``; each column has
        its largest-magnitude component positive.
    """
    six = np.asarray(six, dtype=float)
    if not np.all(np.isfinite(six)):
        raise InvalidTensorError("non-finite tensor component")
    batch = six.shape[:-1]
    flat = six.reshape(-1, 6)
    a = six_to_matrix(flat)
    v = np.broadcast_to(np.eye(3), a.shape).copy()
    scale = np.sqrt(np.sum(a * a, axis=(1, 2)))
    tol = _JACOBI_TOL * scale

    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(2.0 * (a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2))
        active = off > tol
        if not active.any():
            break
        for p, q, r in _PIVOTS:
            apq = a[:, p, q]
            rot = active & (apq != 0.0)
            if not rot.any():
                continue
            safe = np.where(rot, apq, 1.0)
            theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            big = np.abs(theta) > 1e150
            theta_c = np.where(big, 1.0, theta)
            t = np.sign(theta_c) / (np.abs(theta_c) + np.sqrt(theta_c * theta_c + 1.0))
            t = np.where(theta_c == 0.0, 1.0, t)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t = np.where(rot, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            app = a[:, p, p] - t * apq
            aqq = a[:, q, q] + t * apq
            arp = a[:, r, p]
            arq = a[:, r, q]
            new_rp = c * arp - s * arq
            new_rq = s * arp + c * arq
            a[:, p, p] = app
            a[:, q, q] = aqq
            a[:, p, q] = a[:, q, p] = np.where(rot, 0.0, apq)
            a[:, r, p] = a[:, p, r] = new_rp
            a[:, r, q] = a[:, q, r] = new_rq

            vp = v[:, :, p].copy()
            vq = v[:, :, q]
            v[:, :, p] = c[:, None] * vp - s[:, None] * vq
            v[:, :, q] = s[:, None] * vp + c[:, None] * vq

    evals = np.stack([a[:, 0, 0], a[:, 1, 1], a[:, 2, 2]], axis=-1)
    order = np.argsort(-evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    evecs = np.take_along_axis(v, order[:, None, :], axis=-1)
    idx = np.argmax(np.abs(evecs), axis=1)
    lead = np.take_along_axis(evecs, idx[:, None, :], axis=1)
    evecs = evecs * np.where(lead < 0, -1.0, 1.0)
    return evals.reshape(batch + (3,)), evecs.reshape(batch + (3, 3))


def eigendecompose(d):
    """Eigensystem of a single :class:`DiffusionTensor`."""
    six = d.as_array() if isinstance(d, DiffusionTensor) else np.asarray(d, dtype=float)
    evals, evecs = jacobi_eigh(six)
    return EigenSystem(*(float(x) for x in evals), *(evecs[:, i].copy() for i in range(3)))


def fa_from_eigenvalues(evals):
    """Fractional anisotropy of ``(..., 3)`` eigenvalues, zero for all-zero input."""
    ev = np.asarray(evals, dtype=float)
    l1, l2, l3 = ev[..., 0], ev[..., 1], ev[..., 2]
    num = (l1 - l2) ** 2 + (l2 - l3) ** 2 + (l1 - l3) ** 2
    den = 2.0 * (l1 * l1 + l2 * l2 + l3 * l3)
    with np.errstate(invalid="ignore", divide="ignore"):
        fa = np.sqrt(np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0))
    return np.clip(fa, 0.0, 1.0)


def fractional_anisotropy(lambda1, lambda2, lambda3):
    """FA of one eigenvalue triple.

    The all-zero triple is a degenerate background tensor; it returns 0.
    """
    return float(fa_from_eigenvalues(np.array([lambda1, lambda2, lambda3], dtype=float)))


def principal_direction(d):
    return eigendecompose(d).e1


def angles_between(u, v):
    """Sign-invariant angle in degrees between batches of directions.

    Zero-length inputs give NaN; callers decide how to treat them.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.abs(np.sum(u * v, axis=-1)) / (nu * nv)
    return np.degrees(np.arccos(np.clip(cos, 0.0, 1.0)))


def angle_between_principal(u, v):
    """Angle in [0, 90] degrees between two axes, ignoring their signs."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.linalg.norm(u) > 0 and np.linalg.norm(v) > 0):
        raise InvalidDirectionError("zero-length direction")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise InvalidDirectionError("non-finite direction")
    return float(angles_between(u, v))


def trilinear(vol, points):
    """Component-wise trilinear interpolation at ``(N, 3)`` points.

    Returns ``(values, inside)``; rows outside the voxel-center box are
    zero and flagged False.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    dims = np.asarray(vol.dims)
    f = (p - np.asarray(vol.origin)) / np.asarray(vol.spacing)
    inside = np.all((f >= -1e-9) & (f <= dims - 1 + 1e-9), axis=1)
    f = np.clip(f, 0.0, dims - 1)
    i0 = np.minimum(np.floor(f).astype(np.int64), np.maximum(dims - 2, 0))
    w = f - i0
    i1 = np.minimum(i0 + 1, dims - 1)
    data = vol.data
    out = np.zeros((len(p), data.shape[-1]))
    for cx in (0, 1):
        ix = i1[:, 0] if cx else i0[:, 0]
        wx = w[:, 0] if cx else 1.0 - w[:, 0]
        for cy in (0, 1):
            iy = i1[:, 1] if cy else i0[:, 1]
            wy = w[:, 1] if cy else 1.0 - w[:, 1]
            for cz in (0, 1):
                iz = i1[:, 2] if cz else i0[:, 2]
                wz = w[:, 2] if cz else 1.0 - w[:, 2]
                out += (wx * wy * wz)[:, None] * data[ix, iy, iz]
    out[~inside] = 0.0
    return out, inside


def sample_tensor(vol, p):
    """Trilinearly interpolated tensor at a single position (mm)."""
    values, inside = trilinear(vol, np.asarray(p, dtype=float).reshape(1, 3))
    if not inside[0]:
        raise OutOfBoundsError(f"point {tuple(np.ravel(p))} lies outside the volume")
    return DiffusionTensor.from_array(values[0])


def sample_fa_and_direction(vol, points):
    """FA, principal direction and in-bounds flag at many points at once."""
    six, inside = trilinear(vol, points)
    evals, evecs = jacobi_eigh(six)
    fa = fa_from_eigenvalues(evals)
    fa[~inside] = 0.0
    return fa, evecs[..., :, 0], inside
