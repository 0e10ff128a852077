"""Combining per-model score tables into final per-sample predictions.

Likelihoods and ungradability scalars are combined by arithmetic mean; the
out-of-distribution flags by strict majority vote with a configurable tie
rule. Means are accumulated with :func:`math.fsum`, which is exact in the
accumulator, so reordering the models can never change a result bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DuplicateId, EmptyInput, IdSetMismatch, InvalidInput
from .pipeline import SampleScore

__all__ = [
    "EnsembleConfig",
    "FinalPrediction",
    "average_likelihood",
    "average_ungradability",
    "ensemble_predict",
    "vote_ungradable",
]


@dataclass(frozen=True)
class EnsembleConfig:
    """Decision thresholds for combining an ensemble.

    ``likelihood_threshold`` is the referable cut-off on the averaged
    likelihood (boundary counts as referable). ``tie_break_ungradable``
    chooses the outcome when exactly half the models flag a sample; the
    default is the conservative one, sending ties to manual review.
    """

    likelihood_threshold: float = 0.5
    tie_break_ungradable: bool = True

    def __post_init__(self):
        value = float(self.likelihood_threshold)
        if not math.isfinite(value) or not 0.0 < value < 1.0:
            raise InvalidInput(
                f"likelihood threshold must lie strictly between 0 and 1, got {value!r}"
            )
        object.__setattr__(self, "likelihood_threshold", value)


@dataclass(frozen=True)
class FinalPrediction:
    """Ensemble output for one sample."""

    sample_id: str
    likelihood_rg: float
    referable: bool
    ungradable: bool
    ungradability: float


def _finite_values(values: Iterable[float], name: str) -> list[float]:
    out = [float(v) for v in values]
    if not out:
        raise EmptyInput(f"{name} requires at least one model")
    for v in out:
        if not math.isfinite(v):
            raise InvalidInput(f"{name} received a non-finite value: {v!r}")
    return out


def average_likelihood(per_model: Iterable[float]) -> float:
    """Arithmetic mean of per-model likelihoods (permutation invariant)."""
    values = _finite_values(per_model, "average_likelihood")
    return math.fsum(values) / len(values)


def average_ungradability(per_model: Iterable[float]) -> float:
    """Arithmetic mean of per-model ungradability scalars."""
    values = _finite_values(per_model, "average_ungradability")
    return math.fsum(values) / len(values)


def vote_ungradable(per_model: Iterable[bool], config: EnsembleConfig | None = None) -> bool:
    """Strict-majority vote over per-model out-of-distribution flags.

    More than half flagged: ungradable. Fewer than half: gradable. An exact
    tie (even ensemble sizes only) follows ``config.tie_break_ungradable``.
    """
    config = config or EnsembleConfig()
    flags = [bool(v) for v in per_model]
    if not flags:
        raise EmptyInput("vote_ungradable requires at least one model")
    ood = sum(flags)
    remainder = len(flags) - ood
    if ood > remainder:
        return True
    if ood < remainder:
        return False
    return config.tie_break_ungradable


def ensemble_predict(per_model_scores: Sequence[Sequence[SampleScore]],
                     config: EnsembleConfig | None = None) -> list[FinalPrediction]:
    """Combine score tables from several models into final predictions.

    Every table must cover exactly the same set of sample ids, with no
    duplicates inside a table. The output contains one prediction per
    sample, sorted by ``sample_id``.
    """
    config = config or EnsembleConfig()
    tables = [list(table) for table in per_model_scores]
    if not tables:
        raise EmptyInput("ensemble_predict requires at least one score table")

    indexed: list[dict[str, SampleScore]] = []
    for m, table in enumerate(tables):
        by_id: dict[str, SampleScore] = {}
        for record in table:
            if record.sample_id in by_id:
                raise DuplicateId(
                    f"score table {m} repeats sample id {record.sample_id!r}"
                )
            by_id[record.sample_id] = record
        indexed.append(by_id)

    base = set(indexed[0])
    for m, by_id in enumerate(indexed[1:], start=1):
        if set(by_id) != base:
            missing = sorted(base - set(by_id))[:3]
            extra = sorted(set(by_id) - base)[:3]
            raise IdSetMismatch(
                f"score table {m} does not cover the same samples as table 0 "
                f"(missing {missing}, unexpected {extra})"
            )

    predictions = []
    for sid in sorted(base):
        records = [by_id[sid] for by_id in indexed]
        likelihood = average_likelihood(r.likelihood_rg for r in records)
        ungradable = vote_ungradable((r.ood for r in records), config)
        scalar = average_ungradability(r.ungradability for r in records)
        predictions.append(FinalPrediction(
            sample_id=sid,
            likelihood_rg=likelihood,
            referable=likelihood >= config.likelihood_threshold,
            ungradable=ungradable,
            ungradability=scalar,
        ))
    return predictions
