"""Seeded synthetic fixtures for exercising the full pipeline.

The generator produces activation rows that mimic the situation the scoring
method is designed for: in-distribution rows have a moderate class signal,
while out-of-distribution rows combine a damped baseline with sparse, very
large positive spikes. Under a linear head the spikes inflate raw logits —
raw energy then ranks those rows as *more* confident than in-distribution
ones — whereas capping activations collapses the spikes and leaves the
damped baseline visible. At ``sharpness=0`` the out-of-distribution rows
are drawn from exactly the in-distribution recipe, which makes the fixture
usable as a null control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import DEFAULT_CLASS_NAMES
from .errors import InvalidInput
from .io_formats import LabelRecord
from .scoring import LinearHead

__all__ = ["SyntheticFixture", "generate"]

# Baseline activations: gamma with mean 1.0 and standard deviation 0.5.
_BASE_SHAPE = 4.0
_BASE_SCALE = 0.25
# Relative lift of the units aligned with a row's class.
_CLASS_BOOST = 0.4
# Out-of-distribution rows: baseline shrink per unit of sharpness ...
_DAMP_RATE = 0.75
# ... plus sparse positive spikes on this fraction of units,
_SPIKE_FRACTION = 0.04
# with exponential magnitude of this scale per unit of sharpness.
_SPIKE_SCALE = 30.0
# Head weights: base + alignment indicator + noise, scaled to keep logits
# of in-distribution rows around 10 regardless of dimension.
_ALIGN_WEIGHT = 1.0
_WEIGHT_NOISE = 0.05
_LOGIT_SCALE = 6.0
_BIAS = (0.1, -0.1)


@dataclass(frozen=True)
class SyntheticFixture:
    """A generated cohort plus the matching head and reference labels.

    Feature rows are float32 (the storage precision), in-distribution rows
    first. Labels mark every out-of-distribution row as ungradable.
    """

    sample_ids: list[str]
    features: np.ndarray
    head: LinearHead
    model_id: str
    class_names: tuple[str, ...]
    labels: list[LabelRecord]
    n_id: int
    n_ood: int


def _class_groups(dim: int) -> tuple[slice, slice]:
    half = dim // 2
    return slice(0, half), slice(half, dim)


def generate(n_id: int, n_ood: int, dim: int, seed: int,
             ood_sharpness: float = 1.0) -> SyntheticFixture:
    """Generate a deterministic cohort of ``n_id + n_ood`` feature rows.

    ``ood_sharpness`` scales how far the out-of-distribution rows deviate:
    0 reproduces the in-distribution recipe exactly, 1 gives strongly
    spiked rows. The same ``seed`` always produces bit-identical output.
    """
    if n_id < 1:
        raise InvalidInput(f"n_id must be at least 1, got {n_id}")
    if n_ood < 0:
        raise InvalidInput(f"n_ood must be non-negative, got {n_ood}")
    if dim < 1:
        raise InvalidInput(f"dim must be at least 1, got {dim}")
    sharpness = float(ood_sharpness)
    if not math.isfinite(sharpness) or sharpness < 0.0:
        raise InvalidInput(f"ood_sharpness must be non-negative, got {ood_sharpness!r}")

    rng = np.random.default_rng(seed)
    groups = _class_groups(dim)

    def boosted_baseline(count: int) -> tuple[np.ndarray, np.ndarray]:
        classes = rng.integers(0, 2, size=count)
        rows = rng.gamma(_BASE_SHAPE, _BASE_SCALE, size=(count, dim))
        for k in (0, 1):
            rows[classes == k, groups[k]] *= 1.0 + _CLASS_BOOST
        return rows, classes

    id_rows, id_classes = boosted_baseline(n_id)
    ood_rows, ood_classes = boosted_baseline(n_ood)
    damp = 1.0 / (1.0 + _DAMP_RATE * sharpness)
    spike_mask = rng.random(size=(n_ood, dim)) < _SPIKE_FRACTION
    spike_magnitude = rng.exponential(_SPIKE_SCALE, size=(n_ood, dim))
    ood_rows = ood_rows * damp + spike_mask * (sharpness * spike_magnitude)

    weight_noise = rng.normal(0.0, _WEIGHT_NOISE, size=(dim, 2))
    weights = np.ones((dim, 2)) + weight_noise
    for k in (0, 1):
        weights[groups[k], k] += _ALIGN_WEIGHT
    weights *= _LOGIT_SCALE / dim

    head = LinearHead(weights=weights, bias=np.asarray(_BIAS))

    features = np.vstack([id_rows, ood_rows]).astype(np.float32)
    sample_ids = [f"id-{i:06d}" for i in range(n_id)]
    sample_ids += [f"ood-{i:06d}" for i in range(n_ood)]
    labels = [
        LabelRecord(sample_id=sample_ids[i], referable=bool(id_classes[i]), ungradable=False)
        for i in range(n_id)
    ]
    labels += [
        LabelRecord(sample_id=sample_ids[n_id + i], referable=bool(ood_classes[i]),
                    ungradable=True)
        for i in range(n_ood)
    ]
    return SyntheticFixture(
        sample_ids=sample_ids,
        features=features,
        head=head,
        model_id=f"synthetic-{seed}",
        class_names=DEFAULT_CLASS_NAMES,
        labels=labels,
        n_id=n_id,
        n_ood=n_ood,
    )
