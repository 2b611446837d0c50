"""``fiberseg`` command line front-end."""
import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .errors import FiberSegError
from . import pipeline

COMMANDS = ("phantom", "track", "segment", "mesh", "evaluate", "pipeline")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fiberseg",
        description="Fiber bundle boundary estimation on DTI tensor volumes.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON pipeline configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides config)")
    parser.add_argument("--method", choices=pipeline.METHODS,
                        help="segmentation method for segment/mesh/evaluate")
    parser.add_argument("--seed", type=int, help="phantom noise seed (unsigned 64-bit)")
    parser.add_argument("--no-in-plane", action="store_true", help="skip the in-plane correction")
    parser.add_argument("--no-intra-plane", action="store_true",
                        help="skip the intra-plane correction")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _methods(args, out):
    if args.method:
        return [args.method]
    found = [m for m in pipeline.METHODS if (out / f"boundary_{m}.json").exists()]
    return found or list(pipeline.METHODS)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, {"output_dir": str(args.out) if args.out else None})
        ray = dict(cfg["ray"])
        if args.no_in_plane:
            ray["in_plane"] = False
        if args.no_intra_plane:
            ray["intra_plane"] = False
        cfg = cfg.with_overrides(ray=ray)
        out = cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)

        if args.command == "phantom":
            pipeline.stage_phantom(cfg, out, args.seed)
        elif args.command == "track":
            pipeline.stage_track(cfg, out)
        elif args.command == "segment":
            for method in ([args.method] if args.method else pipeline.METHODS):
                pipeline.stage_segment(cfg, out, method)
        elif args.command == "mesh":
            for method in _methods(args, out):
                pipeline.stage_mesh(cfg, out, method)
        elif args.command == "evaluate":
            records = pipeline.stage_evaluate(cfg, out, _methods(args, out))
            print(pipeline.write_report(out, records).table(), end="")
        else:
            print(pipeline.run_pipeline(cfg, args.seed).table(), end="")
    except ConfigError as exc:
        print(f"fiberseg: config error: {exc}", file=sys.stderr)
        return 2
    except (FiberSegError, OSError) as exc:
        print(f"fiberseg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
