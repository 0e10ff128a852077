"""Threshold calibration from a validation set of penultimate activations.

Two thresholds come out of calibration. The activation cap is a high
percentile of the *pooled* activation values (one global scalar over all
rows and units). The energy threshold is chosen so that at least the
configured fraction of the calibrating samples lands on the in-distribution
side of the decision rule; concretely it is the negated k-th smallest
rectified energy with ``k = ceil(percentile * n / 100)``, the largest
threshold with that guarantee. The rank is computed in exact rational
arithmetic so borderline sample counts never lose a sample to float
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._parallel import map_indexed
from .errors import (
    CalibrationError,
    DimensionError,
    EmptyInput,
    InvalidInput,
    InvalidTemperature,
)
from .scoring import LinearHead, apply_head, as_feature_matrix, energy, rectify

__all__ = [
    "DEFAULT_CLASS_NAMES",
    "CalibrationConfig",
    "CalibrationMeta",
    "ModelBundle",
    "calibrate",
    "calibrate_activation_threshold",
    "calibrate_energy_threshold",
    "class_weights",
    "quantile",
]

DEFAULT_CLASS_NAMES = ("no_referable_glaucoma", "referable_glaucoma")


@dataclass(frozen=True)
class CalibrationConfig:
    """Percentiles and temperature used during calibration."""

    activation_percentile: float = 90.0
    energy_percentile: float = 95.0
    temperature: float = 1.0

    def __post_init__(self):
        for name in ("activation_percentile", "energy_percentile"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or not 0.0 < value < 100.0:
                raise InvalidInput(f"{name} must lie strictly between 0 and 100, got {value!r}")
            object.__setattr__(self, name, value)
        temperature = float(self.temperature)
        if not math.isfinite(temperature) or temperature <= 0.0:
            raise InvalidTemperature(
                f"temperature must be a positive finite real, got {temperature!r}"
            )
        object.__setattr__(self, "temperature", temperature)


@dataclass(frozen=True)
class CalibrationMeta:
    """Provenance of a calibrated bundle: sample count and percentiles used."""

    n_validation: int
    activation_percentile: float
    energy_percentile: float

    def __post_init__(self):
        if self.n_validation < 1:
            raise InvalidInput(f"n_validation must be at least 1, got {self.n_validation}")


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to score new samples with one calibrated model."""

    model_id: str
    head: LinearHead
    activation_cap: float
    energy_threshold: float
    temperature: float
    class_names: tuple[str, ...]
    calibration_meta: CalibrationMeta

    def __post_init__(self):
        if not self.model_id:
            raise InvalidInput("model_id must be a non-empty string")
        if not math.isfinite(self.activation_cap) or self.activation_cap <= 0.0:
            raise InvalidInput(
                f"activation cap must be a positive finite real, got {self.activation_cap!r}"
            )
        if not math.isfinite(self.energy_threshold):
            raise InvalidInput("energy threshold must be finite")
        if not math.isfinite(self.temperature) or self.temperature <= 0.0:
            raise InvalidTemperature(
                f"temperature must be a positive finite real, got {self.temperature!r}"
            )
        names = tuple(str(n) for n in self.class_names)
        if len(names) != self.head.n_classes:
            raise DimensionError(
                f"{len(names)} class names for a head with {self.head.n_classes} classes"
            )
        object.__setattr__(self, "class_names", names)


def quantile(data, p: float) -> float:
    """Linear-interpolation quantile of a flat collection of reals.

    With sorted values ``x_0 <= ... <= x_{n-1}`` the result sits at
    fractional position ``p * (n - 1)``: ``p=0`` gives the minimum, ``p=1``
    the maximum, and interior values interpolate between the two closest
    order statistics. Matches numpy's default ("linear") method.
    """
    arr = np.asarray(data, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyInput("quantile of an empty collection")
    if not np.isfinite(arr).all():
        raise InvalidInput("quantile input contains non-finite values")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"quantile level must lie in [0, 1], got {p!r}")
    return float(np.quantile(arr, p))


def calibrate_activation_threshold(features, config: CalibrationConfig | None = None) -> float:
    """Activation cap: a high percentile of the pooled validation activations.

    All rows and all units are pooled into one sample before taking the
    percentile, so the cap is a single global scalar. Raises
    :class:`CalibrationError` if the resulting cap is not strictly positive
    (rectification to a non-positive cap would be meaningless).
    """
    config = config or CalibrationConfig()
    matrix = as_feature_matrix(features)
    if matrix.size == 0:
        raise EmptyInput("cannot calibrate an activation cap from an empty feature matrix")
    cap = quantile(matrix.ravel(), config.activation_percentile / 100.0)
    if cap <= 0.0:
        raise CalibrationError(
            f"activation cap must be positive, got {cap!r}; "
            "the validation activations are degenerate"
        )
    return cap


def _retention_rank(n: int, percentile: float) -> int:
    # Smallest k with k/n >= percentile/100, in exact rational arithmetic.
    return math.ceil(Fraction(percentile) * n / 100)


def rectified_energies(features, head: LinearHead, activation_cap: float,
                       temperature: float = 1.0) -> np.ndarray:
    """Energy of every row after rectification, as a float64 vector."""
    matrix = as_feature_matrix(features)
    if matrix.shape[0] == 0:
        raise EmptyInput("need at least one feature row")
    if matrix.shape[1] != head.n_inputs:
        raise DimensionError(
            f"features have {matrix.shape[1]} columns but the head expects {head.n_inputs}"
        )

    def row_energy(i: int) -> float:
        return energy(apply_head(rectify(matrix[i], activation_cap), head), temperature)

    return np.asarray(map_indexed(row_energy, matrix.shape[0]), dtype=np.float64)


def calibrate_energy_threshold(features, head: LinearHead, activation_cap: float,
                               config: CalibrationConfig | None = None) -> float:
    """Energy threshold keeping >= the configured fraction of samples in-distribution.

    The threshold is the negated ``k``-th smallest rectified energy with
    ``k = ceil(percentile * n / 100)``. Because the decision rule admits the
    boundary, every sample with energy at most that order statistic — at
    least ``k`` of ``n`` — is kept in-distribution, and no larger threshold
    keeps that many.
    """
    config = config or CalibrationConfig()
    energies = rectified_energies(features, head, activation_cap, config.temperature)
    rank = _retention_rank(energies.shape[0], config.energy_percentile)
    return -float(np.sort(energies)[rank - 1])


def calibrate(features, head: LinearHead, config: CalibrationConfig | None = None,
              model_id: str = "model", class_names=None) -> ModelBundle:
    """Run both threshold calibrations and assemble a scoring bundle.

    ``features`` must be in-distribution validation activations with one row
    per sample and one column per penultimate unit. The result is fully
    deterministic in the inputs.
    """
    config = config or CalibrationConfig()
    matrix = as_feature_matrix(features)
    if matrix.shape[0] == 0:
        raise EmptyInput("cannot calibrate from an empty feature matrix")
    if matrix.shape[1] != head.n_inputs:
        raise DimensionError(
            f"features have {matrix.shape[1]} columns but the head expects {head.n_inputs}"
        )
    cap = calibrate_activation_threshold(matrix, config)
    threshold = calibrate_energy_threshold(matrix, head, cap, config)
    if class_names is None:
        class_names = DEFAULT_CLASS_NAMES if head.n_classes == 2 else tuple(
            f"class_{k}" for k in range(head.n_classes)
        )
    meta = CalibrationMeta(
        n_validation=matrix.shape[0],
        activation_percentile=config.activation_percentile,
        energy_percentile=config.energy_percentile,
    )
    return ModelBundle(
        model_id=model_id,
        head=head,
        activation_cap=cap,
        energy_threshold=threshold,
        temperature=config.temperature,
        class_names=tuple(class_names),
        calibration_meta=meta,
    )


def class_weights(counts) -> np.ndarray:
    """Inverse-frequency class weights, scaled so the weights average to 1.

    ``counts`` holds one positive integer per class. Rarer classes receive
    proportionally larger weights; the scaling keeps the overall loss
    magnitude comparable to the unweighted case.
    """
    arr = np.asarray(counts)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInput("class counts must be a non-empty 1-d sequence")
    if not np.issubdtype(arr.dtype, np.integer):
        raise InvalidInput(f"class counts must be integers, got dtype {arr.dtype}")
    if (arr <= 0).any():
        raise InvalidInput("every class count must be positive")
    inverse = 1.0 / arr.astype(np.float64)
    return inverse * (arr.size / inverse.sum())
