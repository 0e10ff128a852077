"""Command line: one export = one manifest through one backbone.

Exit codes match the screening CLI: 0 success, 1 usage, 2 bad input data
or files, 3 a computation that cannot proceed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from oodscreen.errors import (
    DimensionError,
    DuplicateId,
    EmptyInput,
    FormatError,
    InvalidInput,
    InvalidTemperature,
    InvalidThreshold,
)

from .backbone import (
    find_classification_head,
    load_backbone,
    replace_classification_head,
)
from .export import export_features, export_head
from .manifest import effective_document, load_manifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_COMPUTE = 3

_DATA_ERRORS = (FormatError, DuplicateId, DimensionError, EmptyInput,
                InvalidInput, OSError)
_COMPUTE_ERRORS = (InvalidThreshold, InvalidTemperature)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _head_width(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"expected at least 2 classes, got {text}")
    return value


def build_parser() -> _Parser:
    parser = _Parser(
        prog="oodscreen-export",
        description="Export penultimate-layer features and the classification "
                    "head of an image backbone in oodscreen's file formats.",
    )
    parser.add_argument("--manifest", required=True,
                        help="JSON manifest of images to export")
    parser.add_argument("--backbone", required=True,
                        help="torchvision model name, e.g. resnet18")
    parser.add_argument("--out-features", required=True,
                        help="output binary feature file")
    parser.add_argument("--out-head", required=True,
                        help="output head document (JSON)")
    parser.add_argument("--out-labels", default=None,
                        help="optional labels-skeleton CSV (all flags 0)")
    parser.add_argument("--out-manifest", default=None,
                        help="optional self-describing record of this export")
    parser.add_argument("--weights", default=None,
                        help="optional state-dict file for the backbone")
    parser.add_argument("--model-id", default=None,
                        help="model id recorded in the head document "
                             "(default: the backbone name)")
    parser.add_argument("--seed", type=_non_negative_int, default=0,
                        help="initialization seed when no weights are given")
    parser.add_argument("--head-classes", type=_head_width, default=None,
                        help="replace the classification layer with a fresh "
                             "seeded K-class linear layer (e.g. 2 for screening)")
    parser.add_argument("--batch-size", type=_positive_int, default=16)
    return parser


def _write_atomic(path, text: str) -> None:
    target = Path(path)
    fd, temp_name = tempfile.mkstemp(dir=target.parent or Path("."),
                                     prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(temp_name, target)
    except BaseException:
        try:
            os.unlink(temp_name)
        except OSError:
            pass
        raise


def _run(args) -> int:
    manifest = load_manifest(args.manifest)
    model = load_backbone(args.backbone, weights_path=args.weights, seed=args.seed)
    if args.head_classes is not None:
        replace_classification_head(model, args.head_classes, seed=args.seed)
    model_id = args.model_id if args.model_id is not None else args.backbone

    head = export_head(model, model_id, args.out_head)
    exported = export_features(manifest, model, args.out_features,
                               out_labels=args.out_labels,
                               batch_size=args.batch_size)
    if args.out_manifest is not None:
        record = effective_document(manifest, args.backbone, exported)
        _write_atomic(args.out_manifest, json.dumps(record, indent=2) + "\n")

    torch_head = find_classification_head(model)
    print(
        f"exported n={len(exported)} skipped={len(manifest.samples) - len(exported)} "
        f"model_id={model_id} m={torch_head.in_features} K={head.n_classes}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        return _run(args)
    except _COMPUTE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except _DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeError as exc:  # torch: state-dict mismatch, bad checkpoint
        print(f"error: RuntimeError: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
