"""Numerical kernels: activation rectification, the linear head, and energy.

Everything here computes in 64-bit floats regardless of how inputs are stored
on disk. The exponentials inside :func:`energy` and :func:`softmax` are
max-shifted, so logits of any realistic magnitude neither overflow nor lose
the leading term; for a vector of equal logits the shifted form is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    InvalidInput,
    InvalidTemperature,
    InvalidThreshold,
)

__all__ = [
    "LinearHead",
    "apply_head",
    "as_feature_matrix",
    "energy",
    "rectify",
    "softmax",
]


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInput(f"{name} must not be empty")
    if not np.isfinite(arr).all():
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def _checked_temperature(value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidTemperature(f"temperature must be a positive finite real, got {value!r}")
    return value


def as_feature_matrix(values, name: str = "features") -> np.ndarray:
    """Validate a 2-d activation batch and return it as float64.

    A zero-row matrix is allowed (a vacuous batch); non-finite entries and
    other dimensionalities are rejected.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class LinearHead:
    """Final linear layer: an ``(m, K)`` weight matrix and a ``K`` bias vector.

    Logits are ``features @ weights + bias``. The head must have at least two
    output classes; by convention index 1 is the positive class.
    Arrays are converted to float64 and frozen read-only on construction.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if weights.ndim != 2:
            raise DimensionError(f"weights must be a 2-d (m, K) matrix, got shape {weights.shape}")
        if weights.shape[0] < 1:
            raise DimensionError("head must have at least one input unit")
        if weights.shape[1] < 2:
            raise DimensionError(f"head must have at least two output classes, got {weights.shape[1]}")
        if bias.ndim != 1 or bias.shape[0] != weights.shape[1]:
            raise DimensionError(
                f"bias shape {bias.shape} does not match {weights.shape[1]} output classes"
            )
        if not np.isfinite(weights).all() or not np.isfinite(bias).all():
            raise InvalidInput("head weights and bias must be finite")
        weights = np.ascontiguousarray(weights)
        bias = np.ascontiguousarray(bias)
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]


def rectify(values, cap: float) -> np.ndarray:
    """Clamp activations from above: elementwise ``min(values, cap)``.

    Only the upper side is clamped. Values at or below the cap — including
    negative ones — pass through unchanged, so applying the same cap twice
    is a no-op.
    """
    arr = _as_vector(values, "activations")
    cap = float(cap)
    if not math.isfinite(cap) or cap <= 0.0:
        raise InvalidThreshold(f"activation cap must be a positive finite real, got {cap!r}")
    return np.minimum(arr, cap)


def apply_head(features, head: LinearHead) -> np.ndarray:
    """Logits of one feature vector under ``head``.

    Works identically on raw and rectified inputs; the caller decides which
    to feed in.
    """
    arr = _as_vector(features, "features")
    if arr.shape[0] != head.n_inputs:
        raise DimensionError(
            f"feature length {arr.shape[0]} does not match head input size {head.n_inputs}"
        )
    return arr @ head.weights + head.bias


def energy(logits, temperature: float = 1.0) -> float:
    """Temperature-scaled negative log-sum-exp of a logit vector.

    Computed as ``-(M + T * log(sum(exp((l - M) / T))))`` with ``M = max(l)``.
    The result is always at most ``-max(l)``, with equality impossible for
    finite inputs (the sum of exponentials is strictly greater than 1 for
    K >= 2, and exactly 1 only for a single logit).
    """
    arr = _as_vector(logits, "logits")
    temperature = _checked_temperature(temperature)
    peak = float(arr.max())
    total = float(np.exp((arr - peak) / temperature).sum())
    return -(peak + temperature * math.log(total))


def softmax(logits) -> np.ndarray:
    """Max-shifted softmax of a logit vector.

    Entries are non-negative and sum to 1 up to float rounding. In IEEE 754
    arithmetic an entry can be exactly 0.0 (underflow of ``exp``) or exactly
    1.0 (when every other entry underflows); no clamping is applied.
    """
    arr = _as_vector(logits, "logits")
    shifted = np.exp(arr - arr.max())
    return shifted / shifted.sum()
