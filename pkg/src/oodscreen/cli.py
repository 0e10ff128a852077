"""Command-line workflow: calibrate -> score -> ensemble -> evaluate.

Exit codes: 0 success, 1 usage errors (bad flags or flag values), 2 data and
format errors (unreadable or malformed files, mismatched inputs), 3 valid
inputs whose computation degenerates (e.g. a non-positive activation cap,
undefined agreement). Every failure prints exactly one line to stderr of the
form ``error: <ErrorName>: <message>``.
"""

from __future__ import annotations

import argparse
import sys

from . import io_formats, synthetic
from .calibration import CalibrationConfig, calibrate
from .ensemble import EnsembleConfig, ensemble_predict
from .errors import (
    CalibrationError,
    DegenerateLabels,
    DegenerateMarginals,
    DimensionError,
    DuplicateId,
    EmptyInput,
    FormatError,
    IdSetMismatch,
    InvalidInput,
    InvalidTemperature,
    InvalidThreshold,
)
from .metrics import (
    ConfusionTable,
    cohens_kappa,
    partial_auc,
    roc_auc,
    sensitivity_at_specificity,
)
from .pipeline import LIKELIHOOD_SOURCES, score_batch

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_COMPUTE = 3

# Degenerate computations on well-formed inputs.
_COMPUTE_ERRORS = (
    CalibrationError,
    DegenerateLabels,
    DegenerateMarginals,
    InvalidThreshold,
    InvalidTemperature,
)
# Unusable files or inconsistent data. FormatError covers truncation,
# schema, and parse errors via subclassing.
_DATA_ERRORS = (
    FormatError,
    DuplicateId,
    IdSetMismatch,
    DimensionError,
    EmptyInput,
    InvalidInput,
    OSError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems instead of exiting."""

    def error(self, message):
        raise _UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _open_unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value strictly between 0 and 1, got {text}")
    return value


def _open_percent(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not 0.0 < value < 100.0:
        raise argparse.ArgumentTypeError(
            f"expected a percentile strictly between 0 and 100, got {text}"
        )
    return value


def _positive_real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
    return value


def _non_negative_real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"expected a non-negative value, got {text}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oodscreen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[], help="fit thresholds from validation features")
    p.add_argument("--features", required=True, help="validation feature file")
    p.add_argument("--head", required=True, help="head document (JSON)")
    p.add_argument("--activation-pct", type=_open_percent, default=90.0)
    p.add_argument("--energy-pct", type=_open_percent, default=95.0)
    p.add_argument("--temperature", type=_positive_real, default=1.0)
    p.add_argument("--out", required=True, help="output bundle path")
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("score", help="score a feature file with a calibrated bundle")
    p.add_argument("--features", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--likelihood-from", choices=LIKELIHOOD_SOURCES, default="raw")
    p.add_argument("--out", required=True, help="output score table path")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("ensemble", help="combine score tables into final predictions")
    p.add_argument("--scores", required=True, nargs="+", help="one score table per model")
    p.add_argument("--likelihood-threshold", type=_open_unit, default=0.5)
    p.add_argument("--tie-break", choices=("ungradable", "gradable"), default="ungradable")
    p.add_argument("--out", required=True, help="output predictions path")
    p.set_defaults(handler=_cmd_ensemble)

    p = sub.add_parser("evaluate", help="compare predictions against reference labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--min-specificity", type=_open_unit, default=0.9)
    p.add_argument("--sens-at", type=_open_unit, default=0.95)
    p.add_argument("--out", required=True, help="output report path")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("gen-synthetic", help="generate a seeded synthetic cohort")
    p.add_argument("--n-id", type=_positive_int, required=True)
    p.add_argument("--n-ood", type=_positive_int, required=True)
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--seed", type=_non_negative_int, required=True)
    p.add_argument("--ood-sharpness", type=_non_negative_real, default=1.0)
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-head", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(handler=_cmd_gen_synthetic)

    return parser


def _cmd_calibrate(args) -> int:
    ids, values = io_formats.read_features(args.features)
    document = io_formats.read_head_document(args.head)
    config = CalibrationConfig(
        activation_percentile=args.activation_pct,
        energy_percentile=args.energy_pct,
        temperature=args.temperature,
    )
    bundle = calibrate(values, document.head, config,
                       model_id=document.model_id, class_names=document.class_names)
    scores = score_batch(values, ids, bundle)
    kept = sum(1 for s in scores if not s.ood)
    retention = kept / len(scores)
    io_formats.write_bundle(args.out, bundle)
    print(
        f"calibrated model_id={bundle.model_id} n={len(scores)} "
        f"activation_cap={bundle.activation_cap!r} "
        f"energy_threshold={bundle.energy_threshold!r} id_retention={retention:.6f}"
    )
    return EXIT_OK


def _cmd_score(args) -> int:
    ids, values = io_formats.read_features(args.features)
    bundle = io_formats.read_bundle(args.bundle)
    scores = score_batch(values, ids, bundle, likelihood_from=args.likelihood_from)
    io_formats.write_score_table(args.out, scores)
    flagged = sum(1 for s in scores if s.ood)
    print(f"scored n={len(scores)} model_id={bundle.model_id} ood_flagged={flagged}")
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    tables = [io_formats.read_score_table(path) for path in args.scores]
    config = EnsembleConfig(
        likelihood_threshold=args.likelihood_threshold,
        tie_break_ungradable=args.tie_break == "ungradable",
    )
    predictions = ensemble_predict(tables, config)
    io_formats.write_predictions(args.out, predictions)
    ungradable = sum(1 for p in predictions if p.ungradable)
    referable = sum(1 for p in predictions if p.referable)
    print(
        f"ensembled models={len(tables)} n={len(predictions)} "
        f"referable={referable} ungradable={ungradable}"
    )
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    predictions = io_formats.read_predictions(args.predictions)
    labels = io_formats.read_labels(args.labels)
    by_id = {p.sample_id: p for p in predictions}
    label_ids = {l.sample_id for l in labels}
    if set(by_id) != label_ids:
        missing = sorted(label_ids - set(by_id))[:3]
        extra = sorted(set(by_id) - label_ids)[:3]
        raise IdSetMismatch(
            f"predictions and labels cover different samples "
            f"(missing {missing}, unexpected {extra})"
        )
    labels = sorted(labels, key=lambda l: l.sample_id)
    paired = [(by_id[l.sample_id], l) for l in labels]

    gradable = [(p, l) for p, l in paired if not l.ungradable]
    if not gradable:
        raise DegenerateLabels("no gradable samples to evaluate screening on")
    screening_scores = [p.likelihood_rg for p, _ in gradable]
    screening_labels = [l.referable for _, l in gradable]
    screening_pauc = partial_auc(screening_scores, screening_labels, args.min_specificity)
    screening_sens = sensitivity_at_specificity(screening_scores, screening_labels, args.sens_at)

    table = ConfusionTable.from_pairs(
        (p.ungradable for p, _ in paired), (l.ungradable for _, l in paired)
    )
    ungradability_kappa = cohens_kappa(table)
    ungradability_auc = roc_auc(
        [p.ungradability for p, _ in paired], [l.ungradable for _, l in paired]
    )

    report = {
        "n_samples": len(paired),
        "n_gradable": len(gradable),
        "min_specificity": args.min_specificity,
        "sensitivity_target_specificity": args.sens_at,
        "screening_partial_auc": screening_pauc,
        "screening_sensitivity_at_specificity": screening_sens,
        "ungradability_kappa": ungradability_kappa,
        "ungradability_auc": ungradability_auc,
    }
    _write_report(args.out, report)
    print(
        f"evaluated n={len(paired)} "
        f"screening_partial_auc={screening_pauc:.6f} "
        f"screening_sensitivity_at_specificity={screening_sens:.6f} "
        f"ungradability_kappa={ungradability_kappa:.6f} "
        f"ungradability_auc={ungradability_auc:.6f}"
    )
    return EXIT_OK


def _write_report(path, report: dict) -> None:
    # Hand-rolled JSON so the metric values are pinned to 6 decimal places.
    lines = ["{"]
    items = list(report.items())
    for i, (key, value) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        if isinstance(value, int):
            rendered = str(value)
        else:
            rendered = f"{value:.6f}"
        lines.append(f'  "{key}": {rendered}{comma}')
    lines.append("}")
    with io_formats._atomic_open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_gen_synthetic(args) -> int:
    fixture = synthetic.generate(
        n_id=args.n_id, n_ood=args.n_ood, dim=args.dim,
        seed=args.seed, ood_sharpness=args.ood_sharpness,
    )
    io_formats.write_features(args.out_features, fixture.sample_ids, fixture.features)
    io_formats.write_head_document(
        args.out_head, fixture.model_id, fixture.head, fixture.class_names
    )
    io_formats.write_labels(args.out_labels, fixture.labels)
    print(
        f"generated n_id={fixture.n_id} n_ood={fixture.n_ood} dim={args.dim} "
        f"seed={args.seed} ood_sharpness={args.ood_sharpness!r} "
        f"model_id={fixture.model_id}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except _COMPUTE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except _DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
