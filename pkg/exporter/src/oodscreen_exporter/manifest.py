"""Export manifests: which images to export, under which preprocessing.

A manifest is a JSON object. ``samples`` is required; everything else has
defaults. The schema is closed — unknown keys are rejected so typos cannot
silently change preprocessing.

```json
{
  "samples": [{"sample_id": "img-1", "path": "images/img-1.png"}, ...],
  "side": 256,
  "crop": "center-square",
  "normalization": {"mean": [0.485, 0.456, 0.406],
                    "std": [0.229, 0.224, 0.225]}
}
```
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from oodscreen.errors import DuplicateId, InvalidInput, ParseError, SchemaError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
CROP_POLICIES = ("center-square",)

_MANIFEST_KEYS = ("samples", "side", "crop", "normalization")
_SAMPLE_KEYS = ("sample_id", "path")
_NORMALIZATION_KEYS = ("mean", "std")


@dataclass(frozen=True)
class SampleEntry:
    """One image to export: its output row id and where to read it from."""

    sample_id: str
    path: str

    def __post_init__(self):
        if not self.sample_id:
            raise InvalidInput("sample_id must be non-empty")
        if not self.path:
            raise InvalidInput(f"sample {self.sample_id!r} has an empty path")


@dataclass(frozen=True)
class ExportManifest:
    """Validated export plan: samples plus preprocessing parameters."""

    samples: tuple[SampleEntry, ...]
    side: int = 256
    crop: str = "center-square"
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.side < 1:
            raise InvalidInput(f"side must be positive, got {self.side}")
        if self.crop not in CROP_POLICIES:
            raise InvalidInput(
                f"unknown crop policy {self.crop!r}, expected one of {CROP_POLICIES}"
            )
        for name in ("mean", "std"):
            channels = tuple(float(v) for v in getattr(self, name))
            if len(channels) != 3 or not all(math.isfinite(v) for v in channels):
                raise InvalidInput(f"{name} must be 3 finite reals, got {channels!r}")
            object.__setattr__(self, name, channels)
        if any(v == 0.0 for v in self.std):
            raise InvalidInput(f"std channels must be non-zero, got {self.std!r}")
        seen: set[str] = set()
        for entry in self.samples:
            if entry.sample_id in seen:
                raise DuplicateId(f"duplicate sample id {entry.sample_id!r}")
            seen.add(entry.sample_id)


def _require(document: dict, key: str, expected, kind: str):
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, expected):
        raise SchemaError(f"{kind} key {key!r} has the wrong type")
    return value


def load_manifest(path) -> ExportManifest:
    """Read and validate a manifest file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("manifest must be a JSON object")
    if "samples" not in document:
        raise SchemaError("manifest is missing required key 'samples'")
    for key in document:
        if key not in _MANIFEST_KEYS:
            raise SchemaError(f"manifest has unknown key {key!r}")

    raw_samples = _require(document, "samples", list, "manifest")
    samples = []
    for i, raw in enumerate(raw_samples):
        if not isinstance(raw, dict) or set(raw) != set(_SAMPLE_KEYS):
            raise SchemaError(
                f"samples[{i}] must be an object with exactly keys {_SAMPLE_KEYS}"
            )
        samples.append(SampleEntry(
            sample_id=_require(raw, "sample_id", str, f"samples[{i}]"),
            path=_require(raw, "path", str, f"samples[{i}]"),
        ))

    kwargs = {}
    if "side" in document:
        kwargs["side"] = _require(document, "side", int, "manifest")
    if "crop" in document:
        kwargs["crop"] = _require(document, "crop", str, "manifest")
    if "normalization" in document:
        norm = _require(document, "normalization", dict, "manifest")
        if set(norm) != set(_NORMALIZATION_KEYS):
            raise SchemaError(
                f"normalization must have exactly keys {_NORMALIZATION_KEYS}"
            )
        for key in _NORMALIZATION_KEYS:
            values = _require(norm, key, list, "normalization")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in values):
                raise SchemaError(f"normalization {key!r} must be a list of reals")
        kwargs["mean"] = tuple(float(v) for v in norm["mean"])
        kwargs["std"] = tuple(float(v) for v in norm["std"])

    return ExportManifest(samples=tuple(samples), **kwargs)


def effective_document(manifest: ExportManifest, backbone: str,
                       exported_ids: list[str]) -> dict:
    """Self-describing record of an export: what ran, on what, with what."""
    return {
        "backbone": backbone,
        "side": manifest.side,
        "crop": manifest.crop,
        "normalization": {"mean": list(manifest.mean), "std": list(manifest.std)},
        "exported": exported_ids,
        "skipped": [e.sample_id for e in manifest.samples
                    if e.sample_id not in set(exported_ids)],
    }
