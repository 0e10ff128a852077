"""Out-of-distribution screening for exported classifier features.

The package scores penultimate-layer activations with an energy statistic
computed after capping activations at a calibrated percentile, flags
samples whose energy crosses a calibrated threshold as ungradable, combines
several models' scores into final referable/ungradable predictions, and
evaluates those predictions against reference labels. All artifacts travel
through documented on-disk formats (see ``FORMATS.md``), and a command-line
tool (``oodscreen``) chains the steps together.
"""

from .calibration import (
    DEFAULT_CLASS_NAMES,
    CalibrationConfig,
    CalibrationMeta,
    ModelBundle,
    calibrate,
    calibrate_activation_threshold,
    calibrate_energy_threshold,
    class_weights,
    quantile,
)
from .ensemble import (
    EnsembleConfig,
    FinalPrediction,
    average_likelihood,
    average_ungradability,
    ensemble_predict,
    vote_ungradable,
)
from .errors import (
    CalibrationError,
    DegenerateLabels,
    DegenerateMarginals,
    DimensionError,
    DuplicateId,
    EmptyInput,
    FormatError,
    IdSetMismatch,
    InvalidInput,
    InvalidTemperature,
    InvalidThreshold,
    OodScreenError,
    ParseError,
    SchemaError,
    TruncationError,
)
from .io_formats import (
    HeadDocument,
    LabelRecord,
    read_bundle,
    read_features,
    read_head_document,
    read_labels,
    read_predictions,
    read_score_table,
    write_bundle,
    write_features,
    write_head_document,
    write_labels,
    write_predictions,
    write_score_table,
)
from .metrics import (
    ConfusionTable,
    cohens_kappa,
    partial_auc,
    roc_auc,
    roc_curve,
    sensitivity_at_specificity,
)
from .pipeline import (
    REFERABLE_CLASS_INDEX,
    SampleScore,
    decide_ood,
    score_batch,
    ungradability_scalar,
)
from .scoring import LinearHead, apply_head, energy, rectify, softmax
from .synthetic import SyntheticFixture, generate as generate_synthetic

__version__ = "1.0.0"

__all__ = [
    "CalibrationConfig",
    "CalibrationError",
    "CalibrationMeta",
    "ConfusionTable",
    "DEFAULT_CLASS_NAMES",
    "DegenerateLabels",
    "DegenerateMarginals",
    "DimensionError",
    "DuplicateId",
    "EmptyInput",
    "EnsembleConfig",
    "FinalPrediction",
    "FormatError",
    "HeadDocument",
    "IdSetMismatch",
    "InvalidInput",
    "InvalidTemperature",
    "InvalidThreshold",
    "LabelRecord",
    "LinearHead",
    "ModelBundle",
    "OodScreenError",
    "ParseError",
    "REFERABLE_CLASS_INDEX",
    "SampleScore",
    "SchemaError",
    "SyntheticFixture",
    "TruncationError",
    "apply_head",
    "average_likelihood",
    "average_ungradability",
    "calibrate",
    "calibrate_activation_threshold",
    "calibrate_energy_threshold",
    "class_weights",
    "cohens_kappa",
    "decide_ood",
    "energy",
    "ensemble_predict",
    "generate_synthetic",
    "partial_auc",
    "quantile",
    "read_bundle",
    "read_features",
    "read_head_document",
    "read_labels",
    "read_predictions",
    "read_score_table",
    "rectify",
    "roc_auc",
    "roc_curve",
    "score_batch",
    "sensitivity_at_specificity",
    "softmax",
    "ungradability_scalar",
    "vote_ungradable",
    "write_bundle",
    "write_features",
    "write_head_document",
    "write_labels",
    "write_predictions",
    "write_score_table",
]
