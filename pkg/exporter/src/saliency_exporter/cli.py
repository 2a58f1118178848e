"""Command line for the exporter: images + model in, RRSM maps out."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import ExportJob, export_maps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saliency-export",
        description="Write gradient saliency maps of a torch model as RRSM files.",
    )
    parser.add_argument("--model", required=True,
                        help='TorchScript file, or "identity" (score = sum of pixels)')
    parser.add_argument("--images", nargs="+", required=True,
                        help=".npy (h, w, c) arrays or raster images")
    parser.add_argument("--labels", nargs="+", type=int, default=[0],
                        help="target class per image (one value broadcasts)")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--signed", action="store_true",
                        help="keep raw gradient signs instead of absolute values")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        job = ExportJob(
            model_reference=args.model,
            image_paths=tuple(args.images),
            labels=tuple(args.labels),
            output_dir=args.out_dir,
            absolute=not args.signed,
        )
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    outcome = export_maps(job)
    for path in outcome.written:
        sys.stdout.write(f"wrote {path}\n")
    for path, reason in outcome.failed:
        sys.stderr.write(f"failed {path}: {reason}\n")
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
