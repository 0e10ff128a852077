"""Scoring a batch of feature rows with one calibrated model bundle.

Each row is processed independently by the same per-sample code path, so a
batch of one and a slice of a larger batch produce bit-identical numbers,
and the optional thread parallelism (see :mod:`oodscreen._parallel`) cannot
change any result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._parallel import map_indexed
from .calibration import ModelBundle
from .errors import DimensionError, DuplicateId, InvalidInput
from .scoring import apply_head, as_feature_matrix, energy, rectify, softmax

__all__ = [
    "LIKELIHOOD_SOURCES",
    "REFERABLE_CLASS_INDEX",
    "SampleScore",
    "decide_ood",
    "score_batch",
    "ungradability_scalar",
]

# Class index whose softmax mass is reported as the screening likelihood.
REFERABLE_CLASS_INDEX = 1

LIKELIHOOD_SOURCES = ("raw", "rectified")


@dataclass(frozen=True)
class SampleScore:
    """Per-sample scoring record.

    ``logits_raw`` are the head outputs on unrectified features;
    ``energy_raw`` / ``energy_rectified`` the energies before and after the
    activation cap; ``ood`` is True when the sample is flagged
    out-of-distribution, and agrees exactly with ``ungradability > 0``.
    """

    sample_id: str
    logits_raw: tuple[float, ...]
    likelihood_rg: float
    energy_raw: float
    energy_rectified: float
    ood: bool
    ungradability: float


def ungradability_scalar(energy_rectified: float, energy_threshold: float) -> float:
    """Signed distance of a sample's rectified energy past the threshold.

    Positive values mean out-of-distribution; zero and below mean the sample
    is accepted as in-distribution. Increases monotonically in the energy,
    so it is usable directly as a ranking score for ungradability.
    """
    energy_rectified = float(energy_rectified)
    energy_threshold = float(energy_threshold)
    if not math.isfinite(energy_rectified):
        raise InvalidInput(f"rectified energy must be finite, got {energy_rectified!r}")
    if not math.isfinite(energy_threshold):
        raise InvalidInput(f"energy threshold must be finite, got {energy_threshold!r}")
    return energy_threshold + energy_rectified


def decide_ood(energy_rectified: float, energy_threshold: float) -> bool:
    """True when the sample falls on the out-of-distribution side.

    A sample stays in-distribution when its negated energy clears the
    threshold, boundary included. Implemented as the sign of
    :func:`ungradability_scalar`, so the flag and the scalar can never
    disagree.
    """
    return ungradability_scalar(energy_rectified, energy_threshold) > 0.0


def score_batch(features, sample_ids, bundle: ModelBundle,
                likelihood_from: str = "raw") -> list[SampleScore]:
    """Score every feature row against a calibrated bundle.

    ``likelihood_from`` selects whether the class likelihood is computed
    from the raw logits (default) or the rectified ones; energies and the
    out-of-distribution decision always use both as appropriate. Rows keep
    their input order. An empty batch yields an empty list.
    """
    matrix = as_feature_matrix(features)
    ids = [str(s) for s in sample_ids]
    if len(ids) != matrix.shape[0]:
        raise DimensionError(
            f"{len(ids)} sample ids for {matrix.shape[0]} feature rows"
        )
    seen = set()
    for sid in ids:
        if sid in seen:
            raise DuplicateId(f"duplicate sample id {sid!r}")
        seen.add(sid)
    if matrix.shape[1] != bundle.head.n_inputs:
        raise DimensionError(
            f"features have {matrix.shape[1]} columns but the head expects "
            f"{bundle.head.n_inputs}"
        )
    if likelihood_from not in LIKELIHOOD_SOURCES:
        raise InvalidInput(
            f"likelihood_from must be one of {LIKELIHOOD_SOURCES}, got {likelihood_from!r}"
        )

    head = bundle.head
    cap = bundle.activation_cap
    threshold = bundle.energy_threshold
    temperature = bundle.temperature

    def score_row(i: int) -> SampleScore:
        row = matrix[i]
        logits_raw = apply_head(row, head)
        logits_rect = apply_head(rectify(row, cap), head)
        energy_raw = energy(logits_raw, temperature)
        energy_rect = energy(logits_rect, temperature)
        source = logits_rect if likelihood_from == "rectified" else logits_raw
        likelihood = float(softmax(source)[REFERABLE_CLASS_INDEX])
        value = ungradability_scalar(energy_rect, threshold)
        return SampleScore(
            sample_id=ids[i],
            logits_raw=tuple(float(v) for v in logits_raw),
            likelihood_rg=likelihood,
            energy_raw=energy_raw,
            energy_rectified=energy_rect,
            ood=value > 0.0,
            ungradability=value,
        )

    return map_indexed(score_row, matrix.shape[0])
