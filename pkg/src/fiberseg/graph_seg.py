"""Column-graph min-cut segmentation over the evaluation lattice."""
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBundleError, InternalConsistencyError, InvalidParameterError
from .maxflow import max_flow
from .ray_seg import BoundaryField
from .tensor import sample_fa_and_direction


@dataclass(frozen=True)
class SmoothnessParams:
    delta_ray: int = 1
    delta_plane: int = 1

    def __post_init__(self):
        if int(self.delta_ray) < 0 or int(self.delta_plane) < 0:
            raise InvalidParameterError("smoothness parameters must be >= 0")


@dataclass(frozen=True)
class CostParams:
    fa_avg: float
    lambda_weight: float = 1.0

    def __post_init__(self):
        if not 0 < self.fa_avg <= 1:
            raise InvalidParameterError(f"fa_avg must lie in (0, 1], got {self.fa_avg}")
        if not self.lambda_weight > 0:
            raise InvalidParameterError("lambda_weight must be positive")

    @property
    def threshold(self):
        return self.fa_avg / 2.0


@dataclass
class FlowNetwork:
    """Lattice node ``(p, r, j)`` has id ``(p * k + r) * m + j``; then ``s``, ``t``."""

    shape: tuple
    tails: np.ndarray = field(repr=False)
    heads: np.ndarray = field(repr=False)
    caps: np.ndarray = field(repr=False)
    s_cap: np.ndarray = field(repr=False)
    t_cap: np.ndarray = field(repr=False)
    inf: float = 0.0
    d: float = 1.0

    @property
    def n_lattice(self):
        n, k, m = self.shape
        return n * k * m

    @property
    def n_nodes(self):
        return self.n_lattice + 2

    @property
    def source(self):
        return self.n_lattice

    @property
    def sink(self):
        return self.n_lattice + 1

    @property
    def n_inf_arcs(self):
        return int(np.sum(self.caps == self.inf))

    def cut_capacity(self, source_set):
        crossing = source_set[self.tails] & ~source_set[self.heads]
        return float(np.sum(self.caps[crossing]))

    def inf_arcs_cut(self, source_set):
        crossing = source_set[self.tails] & ~source_set[self.heads]
        return int(np.sum(crossing & (self.caps == self.inf)))

    def to_dimacs(self):
        lines = [f"p max {self.n_nodes} {len(self.tails)}",
                 f"n {self.source + 1} s", f"n {self.sink + 1} t"]
        lines += [f"a {a + 1} {b + 1} {c!r}" for a, b, c in zip(self.tails.tolist(), self.heads.tolist(), self.caps.tolist())]
        return "\n".join(lines) + "\n"


def bundle_mean_fa(fibers, vol):
    """Mean FA over every vertex of every fiber."""
    pts = [np.asarray(f, dtype=float).reshape(-1, 3) for f in fibers]
    pts = [p for p in pts if len(p)]
    if not pts:
        raise EmptyBundleError("cannot average FA over an empty bundle")
    fa, _, _ = sample_fa_and_direction(vol, np.concatenate(pts))
    return float(np.mean(fa))


def terminal_capacities(fa, cp):
    t = cp.threshold
    a = cp.lambda_weight * np.maximum(0.0, fa - t)
    b = cp.lambda_weight * np.maximum(0.0, t - fa)
    return a, b


def _smoothness_arcs(shape, sp):
    n, k, m = shape
    ids = np.arange(n * k * m).reshape(shape)
    tails, heads = [], []
    # along each column, downward
    tails.append(ids[:, :, 1:].ravel())
    heads.append(ids[:, :, :-1].ravel())
    j = np.arange(m)
    dr = np.maximum(0, j - int(sp.delta_ray))
    for step in (1, -1):
        tails.append(ids.ravel())
        heads.append(np.roll(ids, -step, axis=1)[:, :, dr].ravel())
    if n > 1:
        dp = np.maximum(0, j - int(sp.delta_plane))
        tails += [ids[:-1].ravel(), ids[1:].ravel()]
        heads += [ids[1:][:, :, dp].ravel(), ids[:-1][:, :, dp].ravel()]
    return np.concatenate(tails), np.concatenate(heads)


def build_network(s_cap, t_cap, sp, d=1.0):
    """Network from explicit ``(n, k, m)`` terminal capacity arrays."""
    s_cap = np.asarray(s_cap, dtype=float)
    t_cap = np.asarray(t_cap, dtype=float)
    shape = s_cap.shape
    if len(shape) != 3 or shape[1] < 3:
        raise InvalidParameterError(f"need an (n, k>=3, m) lattice, got {shape}")
    n_lat = int(np.prod(shape))
    inf = 1.0 + float(np.sum(s_cap)) + float(np.sum(t_cap))
    st, sh = _smoothness_arcs(shape, sp)
    ids = np.arange(n_lat)
    s_nodes = ids[s_cap.ravel() > 0]
    t_nodes = ids[t_cap.ravel() > 0]
    tails = np.concatenate([st, np.full(len(s_nodes), n_lat), t_nodes])
    heads = np.concatenate([sh, s_nodes, np.full(len(t_nodes), n_lat + 1)])
    caps = np.concatenate([np.full(len(st), inf), s_cap.ravel()[s_nodes], t_cap.ravel()[t_nodes]])
    return FlowNetwork(shape, tails, heads, caps, s_cap, t_cap, inf, d)


def build_graph(grid, sp, cp):
    a, b = terminal_capacities(grid.fa, cp)
    return build_network(a, b, sp, grid.params.d)


def min_cut(g):
    """``(source_set, flow_value)``; source_set covers all ``n_nodes`` ids."""
    flow, side = max_flow(g.n_nodes, g.tails, g.heads, g.caps, g.source, g.sink)
    return side, flow


def column_indices(g, source_set):
    """Number of included lattice nodes per column; checks the prefix property."""
    n, k, m = g.shape
    inc = np.asarray(source_set[:g.n_lattice], dtype=bool).reshape(n, k, m)
    count = inc.sum(axis=-1)
    prefix = np.arange(m)[None, None, :] < count[..., None]
    if np.any(prefix != inc):
        p, r = np.argwhere(np.any(prefix != inc, axis=-1))[0]
        raise InternalConsistencyError(f"column ({p}, {r}) of the cut is not a prefix")
    return count


def extract_boundary(g, source_set):
    count = column_indices(g, source_set)
    n, k, m = g.shape
    return BoundaryField(count * g.d, g.d, m, "graph", count == m)
