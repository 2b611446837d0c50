"""Threshold walk along each ray plus median-based outlier corrections."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .io import dump_json, load_json


@dataclass(frozen=True)
class RayThresholds:
    t_fa: float = 0.2
    t_alpha_c: float = 40.0
    t_alpha_n: float = 30.0
    r: int = 1

    def __post_init__(self):
        if int(self.r) < 1:
            raise InvalidParameterError("window size r must be >= 1")


@dataclass
class BoundaryField:
    """Boundary radius (mm) per ``(plane, ray)``."""

    radius: np.ndarray = field(repr=False)
    d: float
    m: int
    provenance: str = ""
    saturated: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.radius = np.asarray(self.radius, dtype=float)
        if self.saturated is None:
            self.saturated = np.zeros(self.radius.shape, dtype=bool)
        limit = self.m * self.d
        if self.radius.ndim != 2 or np.any(self.radius < 0) or np.any(self.radius > limit + 1e-9):
            raise InvalidParameterError(f"radii must lie in [0, {limit}]")

    @property
    def n(self):
        return self.radius.shape[0]

    @property
    def k(self):
        return self.radius.shape[1]

    def replace(self, radius, provenance=None):
        return BoundaryField(radius, self.d, self.m, provenance or self.provenance,
                             self.saturated.copy())

    def to_dict(self):
        return {"n": self.n, "k": self.k, "m": self.m, "d": self.d,
                "radii": self.radius.tolist(), "provenance": self.provenance,
                "saturated": self.saturated.astype(int).tolist()}

    @classmethod
    def from_dict(cls, d):
        radii = np.asarray(d["radii"], dtype=float).reshape(d["n"], d["k"])
        sat = d.get("saturated")
        sat = None if sat is None else np.asarray(sat, dtype=bool).reshape(radii.shape)
        return cls(radii, float(d["d"]), int(d["m"]), d.get("provenance", ""), sat)

    def save(self, path):
        dump_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_json(path))


def passes(fa, alpha_c, alpha_n, th):
    return (fa >= th.t_fa) & (alpha_c <= th.t_alpha_c) & (alpha_n <= th.t_alpha_n)


def boundary_indices(passing, r):
    """Start index of the first unanimously failing window on each ray.

    ``passing`` has shape ``(..., m)``. The window ending at ``j`` covers
    ``j - min(j, r) .. j``. Returns ``(index, saturated)``; saturated rays
    get index ``m``.
    """
    fail = ~np.asarray(passing, dtype=bool)
    m = fail.shape[-1]
    # run[j] = length of the run of failures ending at j
    run = np.zeros(fail.shape, dtype=np.int64)
    acc = np.zeros(fail.shape[:-1], dtype=np.int64)
    for j in range(m):
        acc = np.where(fail[..., j], acc + 1, 0)
        run[..., j] = acc
    j = np.arange(m)
    need = np.minimum(j, r) + 1
    hit = run >= need
    found = hit.any(axis=-1)
    first = np.argmax(hit, axis=-1)
    start = first - np.minimum(first, r)
    index = np.where(found, start, m)
    return index, ~found


def detect_boundary(grid, th):
    ok = passes(grid.fa, grid.alpha_c, grid.alpha_n, th)
    index, saturated = boundary_indices(ok, int(th.r))
    d = grid.params.d
    return BoundaryField(index * d, d, grid.params.m, "ray", saturated)


def _windowed_median(values, axis, wrap, width=5):
    half = width // 2
    x = np.moveaxis(values, axis, -1)
    size = x.shape[-1]
    out = np.empty_like(x)
    for i in range(size):
        if wrap:
            idx = np.arange(i - half, i + half + 1) % size
        else:
            idx = np.arange(max(0, i - half), min(size, i + half + 1))
        out[..., i] = np.median(x[..., idx], axis=-1)
    return np.moveaxis(out, -1, axis)


def _clamp(values, median, max_ratio):
    if not max_ratio > 1:
        raise InvalidParameterError("max_ratio must exceed 1")
    outlier = (values > max_ratio * median) | (values * max_ratio < median)
    return np.where(outlier, median, values)


def in_plane_correction(b, max_ratio=1.5):
    """Replace radii far from the median of 5 neighboring rays (wrapping)."""
    med = _windowed_median(b.radius, axis=1, wrap=True)
    return b.replace(_clamp(b.radius, med, max_ratio))


def intra_plane_correction(b, max_ratio=1.5):
    """Same clamp along the plane axis for each ray index (no wrap)."""
    med = _windowed_median(b.radius, axis=0, wrap=False)
    return b.replace(_clamp(b.radius, med, max_ratio))
