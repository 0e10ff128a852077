"""Shared fixtures: a synthetic PNG corpus and small seeded backbones.

No network access and no pretrained weights: backbones are randomly
initialized with fixed seeds. The consistency contracts under test
(hook-captured features reproducing native logits, format round-trips,
determinism) do not depend on what the weights are.
"""

from __future__ import annotations

import json

import numpy as np
import pytest
from PIL import Image

from oodscreen_exporter import load_backbone, replace_classification_head

N_IMAGES = 12


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """A directory of PNGs: 12 RGB, one grayscale, one wide, one corrupt."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(99)
    for i in range(N_IMAGES):
        side = int(rng.integers(80, 200))
        pixels = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
        Image.fromarray(pixels, mode="RGB").save(root / f"rgb-{i:02d}.png")

    gray = rng.integers(0, 256, size=(120, 120), dtype=np.uint8)
    Image.fromarray(gray, mode="L").save(root / "gray.png")

    wide = rng.integers(0, 256, size=(256, 512, 3), dtype=np.uint8)
    Image.fromarray(wide, mode="RGB").save(root / "wide.png")

    (root / "corrupt.png").write_bytes(b"this is not an image at all")
    return root


@pytest.fixture(scope="session")
def rgb_entries(image_dir):
    return [
        {"sample_id": f"rgb-{i:02d}", "path": str(image_dir / f"rgb-{i:02d}.png")}
        for i in range(N_IMAGES)
    ]


@pytest.fixture(scope="session")
def backbone_2class():
    """resnet18 with a seeded fresh 2-class head, shared read-only."""
    model = load_backbone("resnet18", seed=0)
    return replace_classification_head(model, 2, seed=0)


@pytest.fixture()
def write_manifest(tmp_path):
    """Helper writing a manifest JSON with side=64 (fast inference)."""

    def _write(entries, **overrides) -> str:
        document = {"samples": entries, "side": 64}
        document.update(overrides)
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    return _write
