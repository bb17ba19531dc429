"""Command-line entry point.

Subcommands wire the library end to end: dataset validation, LBP
leave-one-out sweeps, the 20-fold BoVW evaluation, feature-file
evaluation, synthetic corpus generation, and LBP feature export. Every
run logs its full effective configuration (including the seed), and
re-running a logged configuration reproduces the report byte for byte.
A single --seed drives all randomized stages through independent derived
streams; --threads caps parallelism without changing any output.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .bovw import GridStrategy
from .dataset import generate_synthetic, load_dataset
from .evaluation import (
    eval_feature_file,
    folds20_bovw,
    reports_to_csv,
    sweep_lbp,
)
from .features_io import write_feature_file
from .lbp import LbpHistogramExtractor
from .metrics import MetricKind

log = logging.getLogger("histotex")

_METRIC_CHOICES = [m.value for m in MetricKind]


def _int_list(text: str):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None


def _metric_list(text: str):
    names = [part.strip() for part in text.split(",") if part.strip()]
    bad = [n for n in names if n not in _METRIC_CHOICES]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unknown metrics {bad}; choose from {'|'.join(_METRIC_CHOICES)}"
        )
    return names


def _size(text: str):
    if "x" in text.lower():
        w, h = text.lower().split("x")
        return (int(w), int(h))
    side = int(text)
    return (side, side)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="histotex",
        description="Texture-based histopathology image classification "
                    "toolkit (LBP, BoVW + IKSVM, feature-file evaluation).",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42,
                        help="master seed for all randomized stages")
    common.add_argument("--threads", type=int, default=1,
                        help="parallelism cap; any value gives identical output")
    common.add_argument("--out", type=Path, default=None,
                        help="output path (CSV reports default to stdout)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-dataset", parents=[common],
                       help="load a dataset directory and report its shape")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--strict-path960", action="store_true",
                   help="require exactly 20 classes x 48 TIF images")

    p = sub.add_parser("lbp-sweep", parents=[common],
                       help="leave-one-out LBP accuracy over (radius, "
                            "neighbors, metric) grids")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--radii", type=_int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--neighbors", type=_int_list, default=[4, 8, 12, 16, 20, 24])
    p.add_argument("--metrics", type=_metric_list, default=["chi2", "l2", "l1"])
    p.add_argument("--histogram", choices=["uniform", "raw"], default="uniform",
                   help="raw 2^p histograms are limited to p <= 16")
    p.add_argument("--strict-path960", action="store_true")

    p = sub.add_parser("bovw-eval", parents=[common],
                       help="20-fold bag-of-visual-words evaluation")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--grid", type=GridStrategy.parse, default="16x16",
                   metavar="BLOCKxSTRIDE")
    p.add_argument("--dim", type=int, default=256,
                   help="square resize target (256 or 512 canonical)")
    p.add_argument("--k", type=int, default=800, help="codebook size")
    p.add_argument("--classifier", choices=["iksvm"] + _METRIC_CHOICES,
                   default="iksvm")
    p.add_argument("--folds", type=int, default=20)
    p.add_argument("--strict-path960", action="store_true")

    p = sub.add_parser("eval-features", parents=[common],
                       help="leave-one-out evaluation of a feature file")
    p.add_argument("--file", type=Path, required=True)
    p.add_argument("--labels", type=Path, default=None,
                   help="labels sidecar (default: FILE.labels)")
    p.add_argument("--metric", choices=_METRIC_CHOICES, required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a deterministic synthetic corpus as PNGs")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--size", type=_size, default=(64, 64),
                   metavar="SIDE or WxH")

    p = sub.add_parser("export-lbp", parents=[common],
                       help="write LBP histograms in the feature-file format")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--neighbors", type=int, default=8)
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--histogram", choices=["uniform", "raw"], default="uniform")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--strict-path960", action="store_true")
    return parser


def _log_config(args) -> None:
    config = {k: str(v) for k, v in sorted(vars(args).items())}
    log.info("config %s", json.dumps(config, sort_keys=True))


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def _cmd_validate_dataset(args) -> int:
    ds = load_dataset(args.root, strict_path960=args.strict_path960,
                      threads=args.threads)
    counts = ds.class_counts()
    lines = [f"images: {len(ds)}", f"classes: {len(ds.class_names)}"]
    lines += [
        f"  {name}: {int(count)}"
        for name, count in zip(ds.class_names, counts)
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_lbp_sweep(args) -> int:
    ds = load_dataset(args.root, strict_path960=args.strict_path960,
                      threads=args.threads)
    reports = sweep_lbp(
        ds,
        radii=args.radii,
        neighbor_counts=args.neighbors,
        metrics=args.metrics,
        uniform=args.histogram == "uniform",
        seed=args.seed,
        threads=args.threads,
    )
    _emit(reports_to_csv(reports), args.out)
    return 0


def _cmd_bovw_eval(args) -> int:
    ds = load_dataset(args.root, strict_path960=args.strict_path960,
                      threads=args.threads)
    report = folds20_bovw(
        ds,
        grid=args.grid,
        dim=args.dim,
        k=args.k,
        classifier=args.classifier,
        seed=args.seed,
        n_folds=args.folds,
        threads=args.threads,
    )
    _emit(reports_to_csv([report]), args.out)
    return 0


def _cmd_eval_features(args) -> int:
    if args.labels is not None:
        from .features_io import read_feature_file
        from .evaluation import loo_nn_accuracy

        fs = read_feature_file(args.file, labels_path=args.labels)
        report = loo_nn_accuracy(fs.vectors, fs.labels, args.metric,
                                 seed=args.seed)
    else:
        report = eval_feature_file(args.file, args.metric, seed=args.seed)
    _emit(reports_to_csv([report]), args.out)
    return 0


def _cmd_synth(args) -> int:
    if args.out is None:
        raise ValueError("synth requires --out DIRECTORY")
    ds = generate_synthetic(
        n_classes=args.classes,
        per_class=args.per_class,
        size=args.size,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for im in ds.images:
        Image.fromarray(im.pixels.astype(np.uint8), mode="L").save(
            out_dir / f"{im.id}.png"
        )
    log.info("wrote %d images to %s", len(ds), out_dir)
    return 0


def _cmd_export_lbp(args) -> int:
    if args.out is None:
        raise ValueError("export-lbp requires --out FILE")
    ds = load_dataset(args.root, strict_path960=args.strict_path960,
                      threads=args.threads)
    extractor = LbpHistogramExtractor(
        n_points=args.neighbors,
        radius=args.radius,
        uniform=args.histogram == "uniform",
        normalize=not args.no_normalize,
        threads=args.threads,
    )
    feats = extractor.transform(ds.images)
    write_feature_file(
        args.out, feats,
        ids=[im.id for im in ds.images],
        labels=ds.labels,
    )
    log.info("wrote %d x %d features to %s", feats.shape[0], feats.shape[1],
             args.out)
    return 0


_COMMANDS = {
    "validate-dataset": _cmd_validate_dataset,
    "lbp-sweep": _cmd_lbp_sweep,
    "bovw-eval": _cmd_bovw_eval,
    "eval-features": _cmd_eval_features,
    "synth": _cmd_synth,
    "export-lbp": _cmd_export_lbp,
}


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    _log_config(args)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
