"""Evaluation-point lattice around the centerline and its per-point attributes."""
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_rows
from .errors import InvalidGridError, InvalidParameterError
from .io import read_array, write_array
from .tensor import FA_EPSILON, angles_between, sample_fa_and_direction


@dataclass(frozen=True)
class GridParams:
    n: int = 30
    k: int = 36
    m: int = 40
    d: float = 0.5

    def __post_init__(self):
        if self.n < 2 or self.k < 3 or self.m < 2 or not self.d > 0:
            raise InvalidParameterError(f"invalid grid parameters {self}")


@dataclass(frozen=True)
class EvalPoint:
    position: np.ndarray
    fa: float
    alpha_c: float
    alpha_n: float
    in_bounds: bool


@dataclass
class EvalGrid:
    """Dense ``(n, k, m)`` lattice; attribute arrays are indexed ``[plane, ray, depth]``."""

    params: GridParams
    frames: list
    positions: np.ndarray = field(repr=False)
    fa: np.ndarray = field(repr=False)
    alpha_c: np.ndarray = field(repr=False)
    alpha_n: np.ndarray = field(repr=False)
    in_bounds: np.ndarray = field(repr=False)
    voxel_spacing: tuple = (1.0, 1.0, 1.0)

    @property
    def shape(self):
        return (self.params.n, self.params.k, self.params.m)

    def point(self, p, r, j):
        return EvalPoint(self.positions[p, r, j], float(self.fa[p, r, j]),
                         float(self.alpha_c[p, r, j]), float(self.alpha_n[p, r, j]),
                         bool(self.in_bounds[p, r, j]))


def ray_directions(frames, k):
    """Unit ray directions ``(n, k, 3)``: ``cos(2 pi r/k) u + sin(2 pi r/k) v``."""
    theta = 2.0 * np.pi * np.arange(k) / k
    c = np.cos(theta)
    s = np.sin(theta)
    # exact values at quarter turns
    c[np.isclose(c, 0.0, atol=1e-15)] = 0.0
    s[np.isclose(s, 0.0, atol=1e-15)] = 0.0
    u = np.stack([f.u for f in frames])
    v = np.stack([f.v for f in frames])
    return c[None, :, None] * u[:, None, :] + s[None, :, None] * v[:, None, :]


def grid_positions(frames, gp):
    origins = np.stack([f.origin for f in frames])
    dirs = ray_directions(frames, gp.k)
    depth = (np.arange(gp.m) + 1) * gp.d
    return origins[:, None, None, :] + depth[None, None, :, None] * dirs[:, :, None, :]


def window_size(voxel_spacing, d):
    """Smallest window covering one voxel diagonal: ``ceil(diag / d)``, at least 1."""
    if not d > 0:
        raise InvalidParameterError("sample spacing d must be positive")
    diag = float(np.sqrt(np.sum(np.square(np.asarray(voxel_spacing, dtype=float)))))
    ratio = diag / d
    r = int(np.ceil(ratio))
    if r - ratio > 1.0 - 1e-12:
        # ratio is an integer up to rounding
        r -= 1
    return max(1, r)


def build_grid(vol, frames, gp):
    if len(frames) != gp.n:
        raise InvalidGridError(f"{len(frames)} frames for n={gp.n} planes")
    origins = np.stack([f.origin for f in frames])
    fa_o, dir_o, in_o = sample_fa_and_direction(vol, origins)
    if not in_o.all():
        raise InvalidGridError(f"frame origin {int(np.argmin(in_o))} lies outside the volume")
    pos = grid_positions(frames, gp)
    flat = pos.reshape(-1, 3)
    fa, e1, inside = map_rows(lambda pts: sample_fa_and_direction(vol, pts), (flat,))
    shape = (gp.n, gp.k, gp.m)
    fa = fa.reshape(shape)
    e1 = e1.reshape(shape + (3,))
    inside = inside.reshape(shape)
    reliable = inside & (fa >= FA_EPSILON)

    center_dir = np.broadcast_to(dir_o[:, None, None, :], e1.shape)
    center_ok = (fa_o >= FA_EPSILON)[:, None, None]
    alpha_c = angles_between(e1, center_dir)
    alpha_c = np.where(reliable & center_ok, alpha_c, 90.0)

    pred = np.concatenate([center_dir[:, :, :1], e1[:, :, :-1]], axis=2)
    pred_ok = np.concatenate([np.broadcast_to(center_ok, (gp.n, gp.k, 1)), reliable[:, :, :-1]], axis=2)
    alpha_n = angles_between(e1, pred)
    alpha_n = np.where(reliable & pred_ok, alpha_n, 90.0)

    fa = np.where(inside, fa, 0.0)
    return EvalGrid(gp, list(frames), pos, fa, alpha_c, alpha_n, inside, tuple(vol.spacing))


def write_grid(path, grid):
    """Grid dump: volume format with dims ``[m, k, n]`` and (fa, alpha_c, alpha_n)."""
    gp = grid.params
    data = np.stack([grid.fa, grid.alpha_c, grid.alpha_n], axis=-1).transpose(2, 1, 0, 3)
    meta = {"n": gp.n, "k": gp.k, "m": gp.m, "d": gp.d,
            "voxel_spacing": list(grid.voxel_spacing),
            "in_bounds": np.packbits(grid.in_bounds.ravel()).tobytes().hex()}
    return write_array(path, (gp.m, gp.k, gp.n), (gp.d, 1.0, 1.0), (0.0, 0.0, 0.0), data, meta=meta)


def read_grid(path, frames):
    """Load a grid dump; positions are recomputed from ``frames``."""
    header, data = read_array(path)
    meta = header.get("meta", {})
    gp = GridParams(meta["n"], meta["k"], meta["m"], meta["d"])
    data = data.transpose(2, 1, 0, 3)
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(meta["in_bounds"]), dtype=np.uint8))
    in_bounds = bits[:gp.n * gp.k * gp.m].astype(bool).reshape(gp.n, gp.k, gp.m)
    return EvalGrid(gp, list(frames), grid_positions(frames, gp), data[..., 0], data[..., 1],
                    data[..., 2], in_bounds, tuple(meta.get("voxel_spacing", (1.0, 1.0, 1.0))))
