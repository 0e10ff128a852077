"""Manifest schema: defaults, strictness, invariants."""

import json

import pytest

from oodscreen.errors import DuplicateId, InvalidInput, ParseError, SchemaError
from oodscreen_exporter import (
    CROP_POLICIES,
    ExportManifest,
    IMAGENET_MEAN,
    IMAGENET_STD,
    SampleEntry,
    effective_document,
    load_manifest,
)


def _write(tmp_path, document) -> str:
    path = tmp_path / "m.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


MINIMAL = {"samples": [{"sample_id": "a", "path": "a.png"}]}


class TestLoad:
    def test_minimal_manifest_gets_defaults(self, tmp_path):
        manifest = load_manifest(_write(tmp_path, MINIMAL))
        assert [e.sample_id for e in manifest.samples] == ["a"]
        assert manifest.side == 256
        assert manifest.crop == "center-square"
        assert manifest.mean == IMAGENET_MEAN
        assert manifest.std == IMAGENET_STD

    def test_overrides_parsed(self, tmp_path):
        document = dict(MINIMAL, side=64, crop="center-square",
                        normalization={"mean": [0.5, 0.5, 0.5],
                                       "std": [0.25, 0.25, 0.25]})
        manifest = load_manifest(_write(tmp_path, document))
        assert manifest.side == 64
        assert manifest.mean == (0.5, 0.5, 0.5)
        assert manifest.std == (0.25, 0.25, 0.25)

    def test_empty_samples_allowed(self, tmp_path):
        manifest = load_manifest(_write(tmp_path, {"samples": []}))
        assert manifest.samples == ()

    @pytest.mark.parametrize("document,error", [
        ({}, SchemaError),                                    # no samples
        (dict(MINIMAL, surprise=1), SchemaError),             # unknown key
        ({"samples": [{"sample_id": "a"}]}, SchemaError),     # entry missing path
        ({"samples": [{"sample_id": "a", "path": "p", "x": 1}]}, SchemaError),
        ({"samples": "nope"}, SchemaError),
        (dict(MINIMAL, side=True), SchemaError),              # bool is not an int
        (dict(MINIMAL, side="256"), SchemaError),
        (dict(MINIMAL, normalization={"mean": [0, 0, 0]}), SchemaError),
        (dict(MINIMAL, normalization={"mean": [0, 0, 0], "std": [1, 1, "x"]}),
         SchemaError),
        ([1, 2], SchemaError),                                # not an object
        (dict(MINIMAL, side=0), InvalidInput),
        (dict(MINIMAL, crop="fancy"), InvalidInput),
        (dict(MINIMAL, normalization={"mean": [0, 0, 0], "std": [1, 0, 1]}),
         InvalidInput),
        ({"samples": [{"sample_id": "a", "path": "p"},
                      {"sample_id": "a", "path": "q"}]}, DuplicateId),
    ])
    def test_rejects_bad_documents(self, tmp_path, document, error):
        with pytest.raises(error):
            load_manifest(_write(tmp_path, document))

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            load_manifest(path)


class TestType:
    def test_entry_requires_non_empty_fields(self):
        with pytest.raises(InvalidInput):
            SampleEntry(sample_id="", path="p")
        with pytest.raises(InvalidInput):
            SampleEntry(sample_id="a", path="")

    def test_crop_policies_registry(self):
        assert ExportManifest(samples=()).crop in CROP_POLICIES

    def test_effective_document_records_everything(self):
        manifest = ExportManifest(samples=(
            SampleEntry("a", "a.png"), SampleEntry("b", "b.png"),
        ))
        record = effective_document(manifest, "resnet18", ["a"])
        assert record["backbone"] == "resnet18"
        assert record["side"] == 256
        assert record["normalization"]["mean"] == list(IMAGENET_MEAN)
        assert record["exported"] == ["a"]
        assert record["skipped"] == ["b"]
