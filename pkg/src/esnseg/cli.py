"""Command-line interface.

Subcommands: tune, extract, segment, compare, synth, histogram.  Flags
override config-file values.  Exit codes: 0 success, 1 usage error, 2 data
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import PipelineConfig, apply_overrides, load_config
from .errors import ConfigError, DataError, NumericalError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this interface reserves 2 for
    # data errors, so route argparse failures through exit code 1.
    def error(self, message):
        raise _UsageError(message)


def _parse_neurons(text: str):
    """One-based neuron list like '1,3,8' -> zero-based indices."""
    try:
        labels = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise DataError(f"--neurons must be a comma-separated integer list, got {text!r}")
    if not labels or any(v < 1 for v in labels):
        raise DataError("--neurons uses one-based labels (1 is the first neuron)")
    return [v - 1 for v in labels]


def _build_parser() -> _Parser:
    parser = _Parser(prog="esnseg",
                     description="Gray-image segmentation from reservoir "
                                 "equilibrium features")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, help="reservoir generation seed")
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("synth", help="write the synthetic benchmark image")
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="output image file (.png/.pgm)")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--image-seed", type=int, default=1)
    p.add_argument("--noise-amplitude", type=float, default=0.05)

    p = sub.add_parser("tune", help="generate and tune a reservoir on an image")
    common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--eta", type=float, help="tuning learning rate")
    p.add_argument("--n-ip", type=int, help="tuning epochs")

    p = sub.add_parser("extract", help="extract equilibrium-state features")
    common(p)
    p.add_argument("--reservoir", required=True, help="reservoir JSON file")
    p.add_argument("--image", required=True)
    p.add_argument("--neurons", help="one-based neuron selection, e.g. 1,3,8")

    p = sub.add_parser("segment", help="segment an image or feature file")
    common(p)
    p.add_argument("--image")
    p.add_argument("--features")
    p.add_argument("--method",
                   choices=["kmeans", "fcm", "subtractive", "hard", "otsu"])
    p.add_argument("--k", type=int)

    p = sub.add_parser("compare", help="run the full method comparison")
    common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--neurons", help="one-based neuron selection, e.g. 1,3,8")

    p = sub.add_parser("histogram", help="histogram an image or feature file")
    common(p)
    p.add_argument("--image")
    p.add_argument("--features")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--shift", type=float, default=0.0,
                   help="offset added to image intensities before binning")
    return parser


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        overrides["method"] = args.method
    if getattr(args, "k", None) is not None:
        overrides["k"] = args.k
    if getattr(args, "eta", None) is not None:
        overrides["eta"] = args.eta
    if getattr(args, "n_ip", None) is not None:
        overrides["n_ip"] = args.n_ip
    return apply_overrides(cfg, **overrides)


def _run(args) -> None:
    cfg = _load_cfg(args)
    if args.command == "synth":
        pipeline.cmd_synth(cfg, args.out, width=args.width, height=args.height,
                           image_seed=args.image_seed,
                           noise_amplitude=args.noise_amplitude)
    elif args.command == "tune":
        pipeline.cmd_tune(cfg, args.image, args.out)
    elif args.command == "extract":
        neurons = _parse_neurons(args.neurons) if args.neurons else None
        pipeline.cmd_extract(cfg, args.reservoir, args.image, args.out,
                             neurons=neurons)
    elif args.command == "segment":
        pipeline.cmd_segment(cfg, args.out, image_path=args.image,
                             features_path=args.features)
    elif args.command == "compare":
        neurons = (_parse_neurons(args.neurons) if args.neurons
                   else pipeline.DEFAULT_SELECTED_NEURONS)
        pipeline.cmd_compare(cfg, args.image, args.out, selected_neurons=neurons)
    elif args.command == "histogram":
        pipeline.cmd_histogram(cfg, args.out, image_path=args.image,
                               features_path=args.features, bins=args.bins,
                               shift=args.shift)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _run(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ConfigError, OSError) as exc:
        print(f"error [{exc.__class__.__name__}]: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
