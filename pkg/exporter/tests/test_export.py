"""Export contracts: primary-format round-trips, logit consistency,
ordering, determinism, skip behavior."""

import logging

import numpy as np
import pytest
import torch
from torch import nn

from oodscreen import apply_head
from oodscreen.errors import DuplicateId
from oodscreen.io_formats import read_features, read_head_document, read_labels
from oodscreen_exporter import (
    ExportManifest,
    SCREENING_CLASS_NAMES,
    SampleEntry,
    export_features,
    export_head,
    find_classification_head,
    head_to_linear,
    load_backbone,
    preprocess_file,
    run_inference,
)

SIDE = 64


def _manifest(entries) -> ExportManifest:
    return ExportManifest(
        samples=tuple(SampleEntry(e["sample_id"], e["path"]) for e in entries),
        side=SIDE,
    )


@pytest.fixture(scope="module")
def exported(backbone_2class, rgb_entries, tmp_path_factory):
    root = tmp_path_factory.mktemp("exported")
    manifest = _manifest(rgb_entries)
    features_path = root / "features.oodf"
    labels_path = root / "labels.csv"
    head_path = root / "head.json"
    ids = export_features(manifest, backbone_2class, features_path,
                          out_labels=labels_path)
    export_head(backbone_2class, "test-model", head_path)
    return {
        "manifest": manifest,
        "ids": ids,
        "features": features_path,
        "labels": labels_path,
        "head": head_path,
    }


class TestFeatureExport:
    def test_rows_parse_and_follow_manifest_order(self, exported, rgb_entries):
        ids, values = read_features(exported["features"])
        assert ids == [e["sample_id"] for e in rgb_entries]
        assert exported["ids"] == ids
        assert values.shape == (len(rgb_entries), 512)
        assert values.dtype == np.dtype("<f4")

    def test_native_logits_match_reconstruction(self, exported, backbone_2class,
                                                rgb_entries):
        # The cross-boundary consistency contract: the model's own logits
        # vs apply_head on the *stored* features and the *stored* head,
        # within 1e-4 absolute, on >= 10 images.
        manifest = exported["manifest"]
        images = np.stack([
            preprocess_file(e["path"], side=manifest.side,
                            mean=manifest.mean, std=manifest.std)
            for e in rgb_entries
        ])
        _, native = run_inference(backbone_2class, images)

        ids, stored = read_features(exported["features"])
        document = read_head_document(exported["head"])
        assert len(ids) >= 10
        worst = 0.0
        for row, expected in zip(stored, native):
            got = apply_head(row.astype(np.float64), document.head)
            worst = max(worst, float(np.max(np.abs(got - expected))))
        assert worst <= 1e-4, worst

    def test_labels_skeleton_is_all_clear(self, exported):
        records = read_labels(exported["labels"])
        assert [r.sample_id for r in records] == exported["ids"]
        assert all(not r.referable and not r.ungradable for r in records)

    def test_empty_manifest_writes_header_only_file(self, backbone_2class,
                                                    tmp_path):
        path = tmp_path / "empty.oodf"
        ids = export_features(_manifest([]), backbone_2class, path)
        assert ids == []
        got_ids, values = read_features(path)
        assert got_ids == []
        assert values.shape == (0, 512)

    def test_duplicate_manifest_id_rejected(self, rgb_entries):
        twice = [rgb_entries[0], dict(rgb_entries[0])]
        with pytest.raises(DuplicateId):
            _manifest(twice)

    def test_undecodable_image_skipped_with_warning(self, backbone_2class,
                                                    rgb_entries, image_dir,
                                                    tmp_path, caplog):
        entries = rgb_entries[:3] + [
            {"sample_id": "broken", "path": str(image_dir / "corrupt.png")},
            rgb_entries[3],
        ]
        path = tmp_path / "partial.oodf"
        with caplog.at_level(logging.WARNING, logger="oodscreen_exporter"):
            ids = export_features(_manifest(entries), backbone_2class, path)
        assert ids == [e["sample_id"] for e in entries if e["sample_id"] != "broken"]
        assert any("broken" in message for message in caplog.messages)
        got_ids, values = read_features(path)
        assert got_ids == ids
        assert values.shape == (4, 512)

    def test_reruns_are_byte_identical(self, backbone_2class, rgb_entries,
                                       tmp_path, exported):
        path = tmp_path / "again.oodf"
        export_features(_manifest(rgb_entries), backbone_2class, path)
        assert path.read_bytes() == exported["features"].read_bytes()

    def test_batch_size_does_not_change_rows(self, backbone_2class, rgb_entries,
                                             tmp_path):
        # Row semantics must not depend on how inference was chunked.
        # Kernel selection may differ per batch shape, so agreement is
        # numeric (1e-5), not bitwise.
        small = tmp_path / "b1.oodf"
        large = tmp_path / "b16.oodf"
        export_features(_manifest(rgb_entries), backbone_2class, small,
                        batch_size=1)
        export_features(_manifest(rgb_entries), backbone_2class, large,
                        batch_size=16)
        ids_a, values_a = read_features(small)
        ids_b, values_b = read_features(large)
        assert ids_a == ids_b
        assert np.allclose(values_a, values_b, atol=1e-5)


class TestHeadExport:
    def test_two_class_head_document(self, exported, backbone_2class):
        document = read_head_document(exported["head"])
        assert document.model_id == "test-model"
        assert document.class_names == SCREENING_CLASS_NAMES
        torch_head = find_classification_head(backbone_2class)
        expected = torch_head.weight.detach().numpy().astype(np.float64).T
        assert document.head.weights.tolist() == expected.tolist()
        assert document.head.bias.tolist() == (
            torch_head.bias.detach().numpy().astype(np.float64).tolist())

    def test_wide_head_exported_with_warning(self, tmp_path, caplog):
        model = load_backbone("resnet18", seed=1)  # native 1000-class head
        path = tmp_path / "wide_head.json"
        with caplog.at_level(logging.WARNING, logger="oodscreen_exporter"):
            export_head(model, "wide", path)
        assert any("1000" in message for message in caplog.messages)
        document = read_head_document(path)
        assert document.head.n_classes == 1000
        assert len(document.class_names) == 1000
        assert document.class_names[0] == "class_000"

    def test_bias_free_head_gets_zero_bias(self):
        head = head_to_linear(nn.Linear(8, 2, bias=False))
        assert head.bias.tolist() == [0.0, 0.0]


class TestAnyBackbone:
    def test_sequential_model_uses_last_linear(self):
        torch.manual_seed(3)
        model = nn.Sequential(
            nn.Flatten(),
            nn.Linear(3 * SIDE * SIDE, 16),
            nn.ReLU(),
            nn.Linear(16, 3),
        ).eval()
        head = find_classification_head(model)
        assert head.out_features == 3

        images = np.random.default_rng(5).normal(
            size=(4, 3, SIDE, SIDE)).astype(np.float32)
        features, native = run_inference(model, images, batch_size=2)
        assert features.shape == (4, 16)
        linear = head_to_linear(head)
        for row, expected in zip(features, native):
            got = apply_head(row.astype(np.float64), linear)
            assert np.max(np.abs(got - expected)) <= 1e-5
