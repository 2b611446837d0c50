"""File-based pipeline stages.

Each stage reads only what earlier stages wrote into the output directory, so
stages can be re-run individually. ``run_pipeline`` chains them.
"""
import logging
from pathlib import Path

from .centerline import frames_from_json, frames_to_json
from .config import ConfigError, resolve_regions
from .errors import FileFormatError
from .estimators import BundleGridBuilder, GraphBoundarySegmenter, RayBoundarySegmenter
from .evaluation import aggregate, crop_between, dsc, voxelize
from .io import dump_json, load_json, read_mask, read_volume, write_mask, write_volume
from .mesh import build_mesh, export
from .phantom import phantom_from_dict
from .ray_seg import BoundaryField
from .raygrid import read_grid, write_grid
from .tracking import streamlines_to_json

log = logging.getLogger(__name__)

METHODS = ("ray", "graph")


def _volume_path(cfg, out):
    return cfg.path("volume") or out / "phantom"


def _truth_path(cfg, out):
    return cfg.path("truth") or out / "truth"


def stage_phantom(cfg, out, seed=None):
    spec = dict(cfg["phantom"] or {})
    if spec.get("kind", "torus") not in ("torus", "curved_tube"):
        raise ConfigError(f"unknown phantom kind {spec.get('kind')!r}")
    spec["rng_seed"] = int(cfg["rng_seed"] if seed is None else seed)
    vol, mask = phantom_from_dict(spec)
    write_volume(out / "phantom", vol)
    write_mask(out / "truth", mask)
    dump_json(out / "phantom_spec.json", spec)
    log.info("phantom: %s voxels, %d inside", vol.dims, mask.count)


def stage_track(cfg, out):
    vol = read_volume(_volume_path(cfg, out))
    regions = resolve_regions(cfg)
    tr = cfg["tracking"]
    gr = cfg["grid"]
    builder = BundleGridBuilder(samples_per_fiber=int(cfg["samples_per_fiber"]), **tr, **gr)
    grid = builder.fit_transform(vol, regions=regions)
    dump_json(out / "fibers.json", streamlines_to_json(builder.fibers_))
    dump_json(out / "centerline.json", {"points": builder.centerline_.tolist(),
                                        "samples": builder.samples_.tolist()})
    dump_json(out / "frames.json", frames_to_json(builder.frames_))
    dump_json(out / "bundle.json", {"fa_avg": builder.fa_avg_, "n_fibers": len(builder.fibers_),
                                    "n_seeds": builder.n_seeds_})
    write_grid(out / "grid", grid)
    log.info("track: %d of %d seeds kept", len(builder.fibers_), builder.n_seeds_)


def _frames(out):
    return frames_from_json(load_json(out / "frames.json"))


def stage_segment(cfg, out, method):
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    frames = _frames(out)
    grid = read_grid(out / "grid", frames)
    if method == "ray":
        est = RayBoundarySegmenter(**cfg["ray"])
        field = est.fit_predict(grid)
    else:
        g = dict(cfg["graph"])
        fa_avg = g.pop("fa_avg", None)
        if fa_avg is None:
            fa_avg = load_json(out / "bundle.json")["fa_avg"]
        est = GraphBoundarySegmenter(**g)
        field = est.fit_predict(grid, fa_avg=fa_avg)
    field.save(out / f"boundary_{method}.json")
    return field


def _boundary(out, method):
    path = out / f"boundary_{method}.json"
    if not path.exists():
        raise FileFormatError(f"missing file {path}", path=str(path))
    return BoundaryField.load(path)


def stage_mesh(cfg, out, method):
    mesh = build_mesh(_boundary(out, method), _frames(out))
    export(mesh, out / f"mesh_{method}.obj")
    export(mesh, out / f"mesh_{method}.stl")
    return mesh


def stage_evaluate(cfg, out, methods=METHODS, config_id="run"):
    truth = read_mask(_truth_path(cfg, out))
    regions = resolve_regions(cfg)
    reference = crop_between(truth, regions["a"], regions["b"])
    frames = _frames(out)
    records = []
    for method in methods:
        mask = voxelize(_boundary(out, method), frames, truth)
        write_mask(out / f"mask_{method}", mask)
        records.append({"config": config_id, "method": method, "dsc": dsc(mask, reference)})
    return records


def write_report(out, records):
    report = aggregate(records)
    dump_json(out / "report.json", report.to_dict())
    (Path(out) / "report.txt").write_text(report.table())
    return report


def run_single(cfg, out, seed=None, config_id="run"):
    out.mkdir(parents=True, exist_ok=True)
    if cfg["volume"] is None:
        stage_phantom(cfg, out, seed)
    stage_track(cfg, out)
    for method in METHODS:
        stage_segment(cfg, out, method)
        stage_mesh(cfg, out, method)
    return stage_evaluate(cfg, out, METHODS, config_id)


def run_pipeline(cfg, seed=None):
    """All stages for one seed, or one sub-run per entry of ``seeds``."""
    out = cfg.output_dir
    seeds = cfg["seeds"]
    if seed is not None or not seeds:
        s = int(cfg["rng_seed"] if seed is None else seed)
        records = run_single(cfg, out, s, config_id=f"seed{s}")
    else:
        records = []
        for s in seeds:
            records += run_single(cfg, out / f"run_seed{int(s)}", int(s), config_id=f"seed{int(s)}")
    return write_report(out, records)
