"""Pipeline configuration and the table of shipped defaults.

=====================  ========================  ===========================
section / key          default                   used by
=====================  ========================  ===========================
phantom.kind           "torus"                   phantom
phantom.major_radius   40 mm                     phantom
phantom.tube_radius    5 mm                      phantom
phantom.arc_span       90 deg                    phantom
phantom eigenvalues    (1.0, 0.2, 0.2)e-3 in,    phantom
                       0.7e-3 isotropic out
phantom.noise_sigma    0                         phantom
regions                planes at 15 / 75 deg,    tracking, evaluation
                       seed disc at 45 deg
tracking.step_size     0.5 mm                    tracking
tracking.fa_stop       0.15                      tracking
tracking.angle_stop    45 deg                    tracking
tracking.max_steps     2000                      tracking
tracking.seed_density  4 / mm^2                  tracking
samples_per_fiber      50                        centerline
grid.n, k, m, d        30, 36, 40, 0.5 mm        raygrid
ray.t_fa               0.2                       ray_seg
ray.t_alpha_c          40 deg                    ray_seg
ray.t_alpha_n          30 deg                    ray_seg
ray.r                  ceil(voxel diag / d)      ray_seg
ray.in_plane           on                        ray_seg
ray.intra_plane        on                        ray_seg
ray.max_ratio          1.5                       ray_seg
graph.delta_ray        1                         graph_seg
graph.delta_plane      1                         graph_seg
graph.lambda_weight    1.0                       graph_seg
graph.fa_avg           bundle mean FA            graph_seg
rng_seed               0                         phantom noise
=====================  ========================  ===========================
"""
import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FiberSegError
from .io import load_json

DEFAULTS = {
    "phantom": {"kind": "torus"},
    "volume": None,
    "truth": None,
    "regions": None,
    "tracking": {"step_size": 0.5, "fa_stop": 0.15, "angle_stop": 45.0,
                 "max_steps": 2000, "seed_density": 4.0},
    "samples_per_fiber": 50,
    "grid": {"n": 30, "k": 36, "m": 40, "d": 0.5},
    "ray": {"t_fa": 0.2, "t_alpha_c": 40.0, "t_alpha_n": 30.0, "r": None,
            "in_plane": True, "intra_plane": True, "max_ratio": 1.5},
    "graph": {"delta_ray": 1, "delta_plane": 1, "lambda_weight": 1.0, "fa_avg": None},
    "output_dir": "fiberseg_out",
    "rng_seed": 0,
    "seeds": None,
}


class ConfigError(FiberSegError):
    """Invalid configuration; maps to exit code 2."""


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    base_dir: Path = Path(".")

    def __getitem__(self, key):
        return self.data[key]

    @property
    def output_dir(self):
        out = Path(self.data["output_dir"])
        return out if out.is_absolute() else self.base_dir / out

    def path(self, key):
        value = self.data.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def with_overrides(self, **kwargs):
        data = copy.deepcopy(self.data)
        for key, value in kwargs.items():
            if value is not None:
                data[key] = value
        return PipelineConfig(data, self.base_dir)


def load_config(path=None, overrides=None):
    """Defaults <- config file <- ``overrides`` (flag values)."""
    data = copy.deepcopy(DEFAULTS)
    base = Path(".")
    if path is not None:
        path = Path(path)
        try:
            raw = load_json(path)
        except FiberSegError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        data = _merge(data, raw)
        base = path.parent
    cfg = PipelineConfig(data, base)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    validate_config(cfg)
    for key in ("volume", "truth"):
        p = cfg.path(key)
        if p is not None and not Path(str(p) if str(p).endswith(".json") else f"{p}.json").exists():
            raise ConfigError(f"referenced {key} file does not exist: {p}")
    return cfg


def torus_regions(phantom, angle_a=15.0, angle_b=75.0, angle_seed=45.0, margin=3.0, sides=16):
    """Default include planes and seed disc for a torus phantom description."""
    R = float(phantom.get("major_radius", 40.0))
    rt = float(phantom.get("tube_radius", 5.0))

    def plane(deg, polygon):
        phi = np.radians(deg)
        return {"origin": [R * np.cos(phi), R * np.sin(phi), 0.0],
                "normal": [-np.sin(phi), np.cos(phi), 0.0],
                "basis_u": [np.cos(phi), np.sin(phi), 0.0],
                "basis_v": [0.0, 0.0, 1.0],
                "polygon": polygon}

    h = rt + margin
    square = [[-h, -h], [h, -h], [h, h], [-h, h]]
    ang = 2.0 * np.pi * np.arange(sides) / sides
    disc = np.stack([rt * np.cos(ang), rt * np.sin(ang)], axis=1).tolist()
    return {"seed": plane(angle_seed, disc), "a": plane(angle_a, square), "b": plane(angle_b, square)}


def curved_tube_regions(phantom, fractions=(0.15, 0.85), seed_fraction=0.5, margin=3.0, sides=16):
    """Include planes perpendicular to a Bezier tube's centre curve."""
    from .phantom import CurvedTubePhantomSpec, bezier

    cp = np.asarray(phantom.get("control_points", CurvedTubePhantomSpec.control_points), dtype=float)
    rt = float(phantom.get("tube_radius", CurvedTubePhantomSpec.tube_radius))

    def plane(t, polygon):
        c = bezier(cp, [t])[0]
        n = bezier(cp, [t], 1)[0]
        n = n / np.linalg.norm(n)
        ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        u = ref - (ref @ n) * n
        u /= np.linalg.norm(u)
        return {"origin": c.tolist(), "normal": n.tolist(), "basis_u": u.tolist(),
                "basis_v": np.cross(n, u).tolist(), "polygon": polygon}

    h = rt + margin
    square = [[-h, -h], [h, -h], [h, h], [-h, h]]
    ang = 2.0 * np.pi * np.arange(sides) / sides
    disc = np.stack([rt * np.cos(ang), rt * np.sin(ang)], axis=1).tolist()
    return {"seed": plane(seed_fraction, disc), "a": plane(fractions[0], square),
            "b": plane(fractions[1], square)}


def resolve_regions(cfg):
    from .tracking import PlanarRegion

    regions = cfg["regions"]
    if regions is None:
        phantom = cfg["phantom"] or {}
        if cfg["volume"] is not None:
            raise ConfigError("regions must be given when using an input volume")
        kind = phantom.get("kind", "torus")
        regions = torus_regions(phantom) if kind == "torus" else curved_tube_regions(phantom)
    try:
        return {name: PlanarRegion.from_dict(regions[name]) for name in ("seed", "a", "b")}
    except KeyError as exc:
        raise ConfigError(f"regions section lacks {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid region: {exc}") from exc


def validate_config(cfg):
    """Check every section against its module's parameter invariants."""
    from .graph_seg import SmoothnessParams
    from .phantom import CurvedTubePhantomSpec, TorusPhantomSpec, _tuplify
    from .ray_seg import RayThresholds
    from .raygrid import GridParams
    from .tracking import TrackingParams

    try:
        TrackingParams(**cfg["tracking"])
        GridParams(**cfg["grid"])
        ray = dict(cfg["ray"])
        unknown = set(ray) - set(DEFAULTS["ray"])
        if unknown:
            raise TypeError(f"unknown ray keys {sorted(unknown)}")
        if not ray["max_ratio"] > 1:
            raise ValueError("ray.max_ratio must exceed 1")
        RayThresholds(ray["t_fa"], ray["t_alpha_c"], ray["t_alpha_n"], ray["r"] or 1)
        graph = dict(cfg["graph"])
        unknown = set(graph) - set(DEFAULTS["graph"])
        if unknown:
            raise TypeError(f"unknown graph keys {sorted(unknown)}")
        SmoothnessParams(graph["delta_ray"], graph["delta_plane"])
        if not graph["lambda_weight"] > 0:
            raise ValueError("graph.lambda_weight must be positive")
        if graph["fa_avg"] is not None and not 0 < graph["fa_avg"] <= 1:
            raise ValueError("graph.fa_avg must lie in (0, 1]")
        if int(cfg["samples_per_fiber"]) < 2:
            raise ValueError("samples_per_fiber must be >= 2")
        if cfg["volume"] is None:
            spec = dict(cfg["phantom"] or {})
            kind = spec.pop("kind", "torus")
            cls = {"torus": TorusPhantomSpec, "curved_tube": CurvedTubePhantomSpec}.get(kind)
            if cls is None:
                raise ValueError(f"unknown phantom kind {kind!r}")
            cls.from_dict(_tuplify(spec)).validate()
        seeds = cfg["seeds"]
        if seeds is not None and not all(0 <= int(s) < 2 ** 64 for s in seeds):
            raise ValueError("seeds must be unsigned 64-bit integers")
        resolve_regions(cfg)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
