"""Export features, labels skeleton, and the classification head.

Everything written here uses the screening package's documented on-disk
formats, so `oodscreen calibrate` / `oodscreen score` consume the output
unmodified. Undecodable images are skipped with a warning and excluded
from the output; any other failure aborts without leaving partial files.
"""

from __future__ import annotations

import logging

import numpy as np
from PIL import UnidentifiedImageError
from torch import nn

from oodscreen.io_formats import (
    LabelRecord,
    write_features,
    write_head_document,
    write_labels,
)
from oodscreen.scoring import LinearHead

from .backbone import find_classification_head, run_inference
from .manifest import ExportManifest
from .preprocess import preprocess_file

logger = logging.getLogger("oodscreen_exporter")

SCREENING_CLASS_NAMES = ("no_referable_glaucoma", "referable_glaucoma")


def head_to_linear(head: nn.Linear) -> LinearHead:
    """Convert a torch ``nn.Linear`` (K, m) to the (m, K) head type."""
    weights = head.weight.detach().cpu().numpy().astype(np.float64)
    if head.bias is not None:
        bias = head.bias.detach().cpu().numpy().astype(np.float64)
    else:
        bias = np.zeros(head.out_features, dtype=np.float64)
    return LinearHead(weights=weights.T.copy(), bias=bias)


def class_names_for(n_classes: int) -> tuple[str, ...]:
    """The screening pair for two classes, generic names otherwise."""
    if n_classes == 2:
        return SCREENING_CLASS_NAMES
    logger.warning(
        "head has %d classes, not the 2 screening classes; exporting with "
        "generic class names", n_classes,
    )
    return tuple(f"class_{i:03d}" for i in range(n_classes))


def export_head(model: nn.Module, model_id: str, out_path) -> LinearHead:
    """Write the model's classification head as a head document."""
    head = head_to_linear(find_classification_head(model))
    write_head_document(out_path, model_id, head, class_names_for(head.n_classes))
    return head


def export_features(manifest: ExportManifest, model: nn.Module, out_features,
                    out_labels=None, batch_size: int = 16) -> list[str]:
    """Preprocess, run inference, and write the feature file.

    Returns the ids actually exported, in manifest order. Images that
    cannot be decoded are skipped with a logged warning. When
    ``out_labels`` is given, a labels skeleton (every flag 0) is written
    alongside for annotators to fill in.
    """
    exported_ids: list[str] = []
    tensors: list[np.ndarray] = []
    for entry in manifest.samples:
        try:
            tensor = preprocess_file(entry.path, side=manifest.side,
                                     mean=manifest.mean, std=manifest.std)
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            logger.warning("skipping %s (%s): %s", entry.sample_id, entry.path, exc)
            continue
        exported_ids.append(entry.sample_id)
        tensors.append(tensor)

    head = find_classification_head(model)
    if tensors:
        images = np.stack(tensors)
        features, _ = run_inference(model, images, batch_size=batch_size)
    else:
        features = np.zeros((0, head.in_features), dtype=np.float32)

    write_features(out_features, exported_ids, features)
    if out_labels is not None:
        write_labels(out_labels, [
            LabelRecord(sample_id=sid, referable=False, ungradable=False)
            for sid in exported_ids
        ])
    return exported_ids
