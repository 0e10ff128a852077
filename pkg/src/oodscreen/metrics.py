"""Evaluation measures for screening and ungradability outputs.

ROC-style metrics treat larger scores as more positive and handle tied
scores by collapsing each tie group into a single operating point, which
makes the trapezoidal area equal to the Mann-Whitney U statistic with ties
counted half. Chance-corrected agreement is computed from integer counts
with a single final division, so it is exact whenever the true value is
representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLabels,
    DegenerateMarginals,
    DimensionError,
    EmptyInput,
    InvalidInput,
)

__all__ = [
    "ConfusionTable",
    "cohens_kappa",
    "partial_auc",
    "roc_auc",
    "roc_curve",
    "sensitivity_at_specificity",
]


@dataclass(frozen=True)
class ConfusionTable:
    """2x2 confusion counts for a binary decision."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise InvalidInput(f"{name} must be an integer count, got {value!r}")
            if value < 0:
                raise InvalidInput(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, int(value))
        if self.total == 0:
            raise EmptyInput("confusion table must contain at least one sample")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_pairs(cls, predicted, actual) -> "ConfusionTable":
        """Tally boolean (predicted, actual) pairs into a table."""
        predicted = [bool(p) for p in predicted]
        actual = [bool(a) for a in actual]
        if len(predicted) != len(actual):
            raise DimensionError(
                f"{len(predicted)} predictions for {len(actual)} actual labels"
            )
        tp = sum(p and a for p, a in zip(predicted, actual))
        fp = sum(p and not a for p, a in zip(predicted, actual))
        fn = sum(a and not p for p, a in zip(predicted, actual))
        tn = len(actual) - tp - fp - fn
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


def _validated_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    score_arr = np.asarray(scores, dtype=np.float64)
    label_arr = np.asarray(labels)
    if score_arr.ndim != 1 or label_arr.ndim != 1:
        raise InvalidInput("scores and labels must be one-dimensional")
    if score_arr.shape[0] != label_arr.shape[0]:
        raise DimensionError(
            f"{score_arr.shape[0]} scores for {label_arr.shape[0]} labels"
        )
    if score_arr.shape[0] == 0:
        raise EmptyInput("scores and labels must not be empty")
    if not np.isfinite(score_arr).all():
        raise InvalidInput("scores contain non-finite values")
    label_arr = label_arr.astype(bool)
    if label_arr.all() or not label_arr.any():
        raise DegenerateLabels(
            "need at least one positive and one negative label"
        )
    return score_arr, label_arr


def roc_curve(scores, labels) -> np.ndarray:
    """Operating points (fpr, tpr) swept from the strictest threshold down.

    Returns an ``(n_points, 2)`` float array. The first row is ``(0, 0)``
    (classify nothing as positive) and the last is ``(1, 1)``; scores tied
    with each other contribute a single point, so the curve never moves
    "through" a tie group. Both coordinates are non-decreasing.
    """
    score_arr, label_arr = _validated_scores_labels(scores, labels)
    order = np.argsort(-score_arr, kind="stable")
    sorted_scores = score_arr[order]
    sorted_labels = label_arr[order]
    tp_cum = np.cumsum(sorted_labels)
    fp_cum = np.cumsum(~sorted_labels)
    # Last index of every tie group: where the next score differs.
    last_in_group = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([last_in_group, [sorted_scores.shape[0] - 1]])
    n_pos = int(tp_cum[-1])
    n_neg = int(fp_cum[-1])
    points = np.column_stack([fp_cum[idx] / n_neg, tp_cum[idx] / n_pos])
    return np.vstack([[0.0, 0.0], points])


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve by trapezoidal integration.

    Equals the probability that a random positive outscores a random
    negative, with ties counted half.
    """
    curve = roc_curve(scores, labels)
    return float(np.trapezoid(curve[:, 1], curve[:, 0]))


def partial_auc(scores, labels, min_specificity: float = 0.9) -> float:
    """Normalized area under the ROC curve left of ``1 - min_specificity``.

    The curve is integrated over false-positive rates in
    ``[0, 1 - min_specificity]`` only, interpolating linearly where the
    window boundary cuts a segment, and the area is divided by the window
    width. The result lies in ``[0, 1]``: 1.0 for a curve that is perfect
    inside the window, 0.0 for one that stays on the floor, and about
    ``(1 - min_specificity) / 2`` for chance-level scores.
    """
    min_specificity = float(min_specificity)
    if not math.isfinite(min_specificity) or not 0.0 < min_specificity < 1.0:
        raise InvalidInput(
            f"min_specificity must lie strictly between 0 and 1, got {min_specificity!r}"
        )
    window = 1.0 - min_specificity
    curve = roc_curve(scores, labels)
    fpr = curve[:, 0]
    tpr = curve[:, 1]
    inside = fpr <= window
    kept_fpr = list(fpr[inside])
    kept_tpr = list(tpr[inside])
    if kept_fpr[-1] < window:
        # The window boundary falls inside the next segment: interpolate.
        j = int(np.searchsorted(fpr, window, side="right"))
        x0, y0 = fpr[j - 1], tpr[j - 1]
        x1, y1 = fpr[j], tpr[j]
        boundary_tpr = y0 + (y1 - y0) * (window - x0) / (x1 - x0)
        kept_fpr.append(window)
        kept_tpr.append(boundary_tpr)
    area = float(np.trapezoid(kept_tpr, kept_fpr))
    return area / window


def sensitivity_at_specificity(scores, labels, target_specificity: float = 0.95) -> float:
    """Highest sensitivity among thresholds meeting the specificity target.

    Thresholds sweep the observed score values (decision rule
    ``score >= threshold``); no interpolation between operating points is
    performed, so the reported sensitivity is always actually achievable.
    The "classify nothing" point has specificity 1, hence a feasible point
    always exists and the result is 0.0 in the worst case.
    """
    target_specificity = float(target_specificity)
    if not math.isfinite(target_specificity) or not 0.0 < target_specificity <= 1.0:
        raise InvalidInput(
            f"target specificity must lie in (0, 1], got {target_specificity!r}"
        )
    score_arr, label_arr = _validated_scores_labels(scores, labels)
    order = np.argsort(-score_arr, kind="stable")
    sorted_scores = score_arr[order]
    sorted_labels = label_arr[order]
    tp_cum = np.cumsum(sorted_labels)
    fp_cum = np.cumsum(~sorted_labels)
    last_in_group = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([last_in_group, [sorted_scores.shape[0] - 1]])
    n_pos = int(tp_cum[-1])
    n_neg = int(fp_cum[-1])
    best = 0.0
    for i in idx:
        specificity = (n_neg - int(fp_cum[i])) / n_neg
        if specificity >= target_specificity:
            best = max(best, int(tp_cum[i]) / n_pos)
    return best


def cohens_kappa(table: ConfusionTable) -> float:
    """Chance-corrected agreement between two binary assignments.

    Computed as ``(po - pe) / (1 - pe)`` with observed agreement ``po`` and
    the expected agreement ``pe`` of independent raters with the observed
    marginals. Numerator and denominator are formed in exact integer
    arithmetic; only the final division rounds.
    """
    n = table.total
    po_num = table.tp + table.tn
    pe_num = (table.tp + table.fp) * (table.tp + table.fn) \
        + (table.fn + table.tn) * (table.fp + table.tn)
    denominator = n * n - pe_num
    if denominator == 0:
        raise DegenerateMarginals(
            "expected agreement is 1 (both assignments are constant); "
            "kappa is undefined"
        )
    return (po_num * n - pe_num) / denominator
