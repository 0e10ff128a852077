"""Readers and writers for the on-disk artifacts.

Three families of formats make up the package's external surface:

* **feature files** — binary containers of 32-bit activations plus sample
  ids (magic ``OODF``; byte layout documented in ``FORMATS.md``),
* **head and bundle documents** — strict-schema JSON carrying a linear head
  and, for calibrated bundles, thresholds and calibration metadata,
* **tables** — comma-separated score tables, final predictions, and labels
  with LF line endings.

Every writer stages its output in a temporary file in the destination
directory and renames it into place, so an interrupted run never leaves a
half-written artifact at the target path. Floats in text formats use
Python's shortest round-trip representation (``repr``), so a write/read
cycle reproduces every value bit for bit. Binary feature data is stored as
little-endian IEEE 754 binary32 regardless of platform.

Readers are strict: unknown JSON keys, stray trailing bytes, non-finite
values, duplicate ids, and malformed cells are all rejected with a specific
error rather than repaired.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .calibration import CalibrationMeta, ModelBundle
from .errors import (
    DimensionError,
    DuplicateId,
    FormatError,
    InvalidInput,
    ParseError,
    SchemaError,
    TruncationError,
)
from .pipeline import SampleScore
from .ensemble import FinalPrediction
from .scoring import LinearHead

__all__ = [
    "FEATURE_MAGIC",
    "FEATURE_VERSION",
    "FEATURE_DTYPE_FLOAT32_LE",
    "LABEL_COLUMNS",
    "PREDICTION_COLUMNS",
    "SCORE_COLUMNS",
    "HeadDocument",
    "LabelRecord",
    "read_bundle",
    "read_features",
    "read_head_document",
    "read_labels",
    "read_predictions",
    "read_score_table",
    "write_bundle",
    "write_features",
    "write_head_document",
    "write_labels",
    "write_predictions",
    "write_score_table",
]

FEATURE_MAGIC = b"OODF"
FEATURE_VERSION = 1
FEATURE_DTYPE_FLOAT32_LE = 1

# magic, version, dtype, n_rows, n_cols — all little-endian.
_FEATURE_HEADER = struct.Struct("<4sHHQQ")
_ID_LENGTH = struct.Struct("<H")
_MAX_ID_BYTES = 0xFFFF

SCORE_COLUMNS = (
    "sample_id", "logit_0", "logit_1", "likelihood_rg",
    "energy_raw", "energy_rectified", "ood", "ungradability",
)
PREDICTION_COLUMNS = (
    "sample_id", "likelihood_rg", "referable", "ungradable", "ungradability",
)
LABEL_COLUMNS = ("sample_id", "referable", "ungradable")


class HeadDocument(NamedTuple):
    """Contents of an uncalibrated head document."""

    model_id: str
    head: LinearHead
    class_names: tuple[str, ...]


@dataclass(frozen=True)
class LabelRecord:
    """Reference labels for one sample."""

    sample_id: str
    referable: bool
    ungradable: bool


# ---------------------------------------------------------------------------
# atomic writing


@contextmanager
def _atomic_open(path, mode: str) -> Iterator:
    """Open a temporary file that replaces ``path`` only on success."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        if "b" in mode:
            handle = os.fdopen(fd, mode)
        else:
            handle = os.fdopen(fd, mode, encoding="utf-8", newline="")
        with handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# feature files (binary)


def _checked_ids(sample_ids) -> list[str]:
    ids = list(sample_ids)
    seen = set()
    for sid in ids:
        if not isinstance(sid, str) or not sid:
            raise InvalidInput(f"sample ids must be non-empty strings, got {sid!r}")
        if sid in seen:
            raise DuplicateId(f"duplicate sample id {sid!r}")
        seen.add(sid)
    return ids


def write_features(path, sample_ids: Sequence[str], values) -> None:
    """Write activations as a binary feature file.

    ``values`` must be a 2-d array with one row per sample id; it is stored
    as little-endian binary32, so anything not exactly representable in
    binary32 is rounded once here and never again. Non-finite values (before
    or after that rounding) are rejected.
    """
    ids = _checked_ids(sample_ids)
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise DimensionError(f"feature values must be 2-d, got shape {arr.shape}")
    if len(ids) != arr.shape[0]:
        raise DimensionError(f"{len(ids)} sample ids for {arr.shape[0]} feature rows")
    with np.errstate(over="ignore"):  # overflow is caught by the check below
        data = np.ascontiguousarray(arr, dtype="<f4")
    if data.size and not np.isfinite(data).all():
        raise InvalidInput("feature values must be finite binary32 numbers")

    encoded = []
    for sid in ids:
        blob = sid.encode("utf-8")
        if len(blob) > _MAX_ID_BYTES:
            raise FormatError(f"sample id {sid[:32]!r}... exceeds {_MAX_ID_BYTES} bytes")
        encoded.append(blob)

    with _atomic_open(path, "wb") as fh:
        fh.write(_FEATURE_HEADER.pack(
            FEATURE_MAGIC, FEATURE_VERSION, FEATURE_DTYPE_FLOAT32_LE,
            arr.shape[0], arr.shape[1],
        ))
        for blob in encoded:
            fh.write(_ID_LENGTH.pack(len(blob)))
            fh.write(blob)
        fh.write(data.tobytes())


def read_features(path) -> tuple[list[str], np.ndarray]:
    """Read a binary feature file into ``(sample_ids, float32 array)``.

    All declared sizes are validated against the actual byte count before
    any data is materialized, so a corrupt header cannot trigger a huge
    allocation. Trailing bytes after the data block are an error.
    """
    data = Path(path).read_bytes()
    if len(data) < _FEATURE_HEADER.size:
        raise TruncationError(
            f"file is {len(data)} bytes, shorter than the {_FEATURE_HEADER.size}-byte header"
        )
    magic, version, dtype, n_rows, n_cols = _FEATURE_HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if dtype != FEATURE_DTYPE_FLOAT32_LE:
        raise FormatError(f"unsupported dtype code {dtype}")

    offset = _FEATURE_HEADER.size
    if offset + 2 * n_rows > len(data):
        raise TruncationError(
            f"file ends inside the id block ({n_rows} ids declared)"
        )
    ids: list[str] = []
    seen = set()
    for i in range(n_rows):
        (id_length,) = _ID_LENGTH.unpack_from(data, offset)
        offset += _ID_LENGTH.size
        if offset + id_length > len(data):
            raise TruncationError(f"file ends inside sample id {i}")
        try:
            sid = data[offset:offset + id_length].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"sample id {i} is not valid UTF-8: {exc}") from None
        offset += id_length
        if not sid:
            raise FormatError(f"sample id {i} is empty")
        if sid in seen:
            raise DuplicateId(f"duplicate sample id {sid!r}")
        seen.add(sid)
        ids.append(sid)

    expected = 4 * n_rows * n_cols
    remaining = len(data) - offset
    if remaining < expected:
        raise TruncationError(
            f"data block holds {remaining} bytes but {expected} are declared"
        )
    if remaining > expected:
        raise FormatError(f"{remaining - expected} trailing bytes after the data block")
    values = np.frombuffer(data, dtype="<f4", count=n_rows * n_cols, offset=offset)
    values = values.reshape(n_rows, n_cols).copy()
    if values.size and not np.isfinite(values).all():
        raise FormatError("data block contains non-finite values")
    return ids, values


# ---------------------------------------------------------------------------
# JSON documents


def _load_json_object(path, kind: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")

    def reject_constant(token):
        raise ParseError(f"non-finite number {token!r} in {kind}")

    try:
        document = json.loads(text, parse_constant=reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{kind} is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError(f"{kind} must be a JSON object")
    return document


def _check_keys(document: dict, required: tuple[str, ...], kind: str) -> None:
    for key in required:
        if key not in document:
            raise SchemaError(f"{kind} is missing key {key!r}")
    for key in document:
        if key not in required:
            raise SchemaError(f"{kind} has unknown key {key!r}")


def _require_str(document: dict, key: str, kind: str) -> str:
    value = document[key]
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{kind} key {key!r} must be a non-empty string")
    return value


def _require_int(document: dict, key: str, kind: str) -> int:
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{kind} key {key!r} must be an integer")
    return value


def _require_real(document: dict, key: str, kind: str) -> float:
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{kind} key {key!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{kind} key {key!r} must be finite")
    return value


def _require_real_list(document: dict, key: str, kind: str) -> list[float]:
    value = document[key]
    if not isinstance(value, list):
        raise SchemaError(f"{kind} key {key!r} must be a list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"{kind} key {key!r} must contain only finite numbers")
        out.append(float(v))
    return out


def _require_str_list(document: dict, key: str, kind: str) -> list[str]:
    value = document[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{kind} key {key!r} must be a list of strings")
    return list(value)


def _head_from_document(document: dict, kind: str) -> tuple[LinearHead, list[str]]:
    m = _require_int(document, "m", kind)
    n_classes = _require_int(document, "K", kind)
    weights = _require_real_list(document, "weights", kind)
    bias = _require_real_list(document, "bias", kind)
    class_names = _require_str_list(document, "class_names", kind)
    if m < 1 or n_classes < 2:
        raise DimensionError(f"{kind} declares m={m}, K={n_classes}; need m >= 1 and K >= 2")
    if len(weights) != m * n_classes:
        raise DimensionError(
            f"{kind} declares m*K = {m * n_classes} weights but carries {len(weights)}"
        )
    if len(bias) != n_classes:
        raise DimensionError(f"{kind} carries {len(bias)} bias entries for K={n_classes}")
    if len(class_names) != n_classes:
        raise DimensionError(f"{kind} carries {len(class_names)} class names for K={n_classes}")
    head = LinearHead(
        weights=np.asarray(weights, dtype=np.float64).reshape(m, n_classes),
        bias=np.asarray(bias, dtype=np.float64),
    )
    return head, class_names


_HEAD_KEYS = ("model_id", "m", "K", "class_names", "weights", "bias")
_BUNDLE_KEYS = _HEAD_KEYS + ("c", "tau", "temperature", "calibration_meta")
_META_KEYS = ("n_validation", "activation_percentile", "energy_percentile")


def _head_payload(model_id: str, head: LinearHead, class_names) -> dict:
    return {
        "model_id": model_id,
        "m": head.n_inputs,
        "K": head.n_classes,
        "class_names": list(class_names),
        "weights": [float(v) for v in head.weights.ravel()],
        "bias": [float(v) for v in head.bias],
    }


def _dump_json(path, document: dict) -> None:
    with _atomic_open(path, "w") as fh:
        json.dump(document, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_head_document(path, model_id: str, head: LinearHead, class_names) -> None:
    """Write an uncalibrated head document (weights row-major, length m*K)."""
    class_names = [str(n) for n in class_names]
    if len(class_names) != head.n_classes:
        raise DimensionError(
            f"{len(class_names)} class names for a head with {head.n_classes} classes"
        )
    _dump_json(path, _head_payload(model_id, head, class_names))


def read_head_document(path) -> HeadDocument:
    """Read and validate a head document."""
    document = _load_json_object(path, "head document")
    _check_keys(document, _HEAD_KEYS, "head document")
    model_id = _require_str(document, "model_id", "head document")
    head, class_names = _head_from_document(document, "head document")
    return HeadDocument(model_id=model_id, head=head, class_names=tuple(class_names))


def write_bundle(path, bundle: ModelBundle) -> None:
    """Write a calibrated bundle document.

    Floats are serialized with their shortest round-trip representation, so
    reading the document back reproduces the thresholds bit for bit.
    """
    document = _head_payload(bundle.model_id, bundle.head, bundle.class_names)
    document.update({
        "c": bundle.activation_cap,
        "tau": bundle.energy_threshold,
        "temperature": bundle.temperature,
        "calibration_meta": {
            "n_validation": bundle.calibration_meta.n_validation,
            "activation_percentile": bundle.calibration_meta.activation_percentile,
            "energy_percentile": bundle.calibration_meta.energy_percentile,
        },
    })
    _dump_json(path, document)


def read_bundle(path) -> ModelBundle:
    """Read and validate a calibrated bundle document."""
    document = _load_json_object(path, "bundle")
    _check_keys(document, _BUNDLE_KEYS, "bundle")
    model_id = _require_str(document, "model_id", "bundle")
    head, class_names = _head_from_document(document, "bundle")
    meta_doc = document["calibration_meta"]
    if not isinstance(meta_doc, dict):
        raise SchemaError("bundle key 'calibration_meta' must be an object")
    _check_keys(meta_doc, _META_KEYS, "calibration_meta")
    meta = CalibrationMeta(
        n_validation=_require_int(meta_doc, "n_validation", "calibration_meta"),
        activation_percentile=_require_real(meta_doc, "activation_percentile", "calibration_meta"),
        energy_percentile=_require_real(meta_doc, "energy_percentile", "calibration_meta"),
    )
    return ModelBundle(
        model_id=model_id,
        head=head,
        activation_cap=_require_real(document, "c", "bundle"),
        energy_threshold=_require_real(document, "tau", "bundle"),
        temperature=_require_real(document, "temperature", "bundle"),
        class_names=tuple(class_names),
        calibration_meta=meta,
    )


# ---------------------------------------------------------------------------
# tables (comma-separated, LF line endings)


def _format_float(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInput(f"table floats must be finite, got {value!r}")
    return repr(value)


def _format_flag(value: bool) -> str:
    return "1" if value else "0"


def _write_table(path, header: tuple[str, ...], rows) -> None:
    with _atomic_open(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


class _TableReader:
    """Shared cursor/validation logic for the comma-separated formats."""

    def __init__(self, path, header: tuple[str, ...]):
        self.header = header
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                first = next(reader)
            except StopIteration:
                raise FormatError(f"missing header row; expected {','.join(header)}") from None
            if tuple(first) != header:
                raise FormatError(
                    f"bad header {','.join(first)!r}; expected {','.join(header)!r}"
                )
            self.rows = list(reader)
        self.seen_ids: set[str] = set()

    def cells(self) -> Iterator[tuple[int, list[str]]]:
        for i, row in enumerate(self.rows, start=1):
            if len(row) != len(self.header):
                raise ParseError(
                    f"expected {len(self.header)} cells, found {len(row)}", row=i
                )
            yield i, row

    def sample_id(self, row_number: int, cell: str) -> str:
        if not cell:
            raise ParseError("sample id must not be empty", row=row_number, column="sample_id")
        if cell in self.seen_ids:
            raise DuplicateId(f"duplicate sample id {cell!r} at row {row_number}")
        self.seen_ids.add(cell)
        return cell

    @staticmethod
    def real(row_number: int, column: str, cell: str) -> float:
        try:
            value = float(cell)
        except ValueError:
            raise ParseError(
                f"cannot parse {cell!r} as a real number", row=row_number, column=column
            ) from None
        if not math.isfinite(value):
            raise ParseError(
                f"value {cell!r} is not finite", row=row_number, column=column
            )
        return value

    @staticmethod
    def flag(row_number: int, column: str, cell: str) -> bool:
        if cell == "1":
            return True
        if cell == "0":
            return False
        raise ParseError(
            f"expected 0 or 1, found {cell!r}", row=row_number, column=column
        )


def write_score_table(path, scores: Sequence[SampleScore]) -> None:
    """Write per-sample scores for a single model (two-class heads only)."""
    rows = []
    seen = set()
    for record in scores:
        if len(record.logits_raw) != 2:
            raise DimensionError(
                f"score tables store two-class logits, got {len(record.logits_raw)}"
            )
        if record.sample_id in seen:
            raise DuplicateId(f"duplicate sample id {record.sample_id!r}")
        seen.add(record.sample_id)
        rows.append((
            record.sample_id,
            _format_float(record.logits_raw[0]),
            _format_float(record.logits_raw[1]),
            _format_float(record.likelihood_rg),
            _format_float(record.energy_raw),
            _format_float(record.energy_rectified),
            _format_flag(record.ood),
            _format_float(record.ungradability),
        ))
    _write_table(path, SCORE_COLUMNS, rows)


def read_score_table(path) -> list[SampleScore]:
    """Read a score table back into :class:`SampleScore` records."""
    table = _TableReader(path, SCORE_COLUMNS)
    records = []
    for i, row in table.cells():
        records.append(SampleScore(
            sample_id=table.sample_id(i, row[0]),
            logits_raw=(table.real(i, "logit_0", row[1]), table.real(i, "logit_1", row[2])),
            likelihood_rg=table.real(i, "likelihood_rg", row[3]),
            energy_raw=table.real(i, "energy_raw", row[4]),
            energy_rectified=table.real(i, "energy_rectified", row[5]),
            ood=table.flag(i, "ood", row[6]),
            ungradability=table.real(i, "ungradability", row[7]),
        ))
    return records


def write_predictions(path, predictions: Sequence[FinalPrediction]) -> None:
    """Write final ensemble predictions."""
    rows = []
    seen = set()
    for record in predictions:
        if record.sample_id in seen:
            raise DuplicateId(f"duplicate sample id {record.sample_id!r}")
        seen.add(record.sample_id)
        rows.append((
            record.sample_id,
            _format_float(record.likelihood_rg),
            _format_flag(record.referable),
            _format_flag(record.ungradable),
            _format_float(record.ungradability),
        ))
    _write_table(path, PREDICTION_COLUMNS, rows)


def read_predictions(path) -> list[FinalPrediction]:
    """Read a predictions table."""
    table = _TableReader(path, PREDICTION_COLUMNS)
    records = []
    for i, row in table.cells():
        records.append(FinalPrediction(
            sample_id=table.sample_id(i, row[0]),
            likelihood_rg=table.real(i, "likelihood_rg", row[1]),
            referable=table.flag(i, "referable", row[2]),
            ungradable=table.flag(i, "ungradable", row[3]),
            ungradability=table.real(i, "ungradability", row[4]),
        ))
    return records


def write_labels(path, labels: Sequence[LabelRecord]) -> None:
    """Write reference labels."""
    rows = []
    seen = set()
    for record in labels:
        if record.sample_id in seen:
            raise DuplicateId(f"duplicate sample id {record.sample_id!r}")
        seen.add(record.sample_id)
        rows.append((
            record.sample_id,
            _format_flag(record.referable),
            _format_flag(record.ungradable),
        ))
    _write_table(path, LABEL_COLUMNS, rows)


def read_labels(path) -> list[LabelRecord]:
    """Read a labels table."""
    table = _TableReader(path, LABEL_COLUMNS)
    records = []
    for i, row in table.cells():
        records.append(LabelRecord(
            sample_id=table.sample_id(i, row[0]),
            referable=table.flag(i, "referable", row[1]),
            ungradable=table.flag(i, "ungradable", row[2]),
        ))
    return records
