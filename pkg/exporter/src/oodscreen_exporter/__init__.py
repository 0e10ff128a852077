"""Bridge from image-classification backbones to oodscreen's file formats.

Preprocess images (center-square crop, 256x256 resize, channel
normalization), capture penultimate-layer activations and the final linear
layer, and write them as feature files and head documents that the
screening pipeline consumes unmodified.
"""

from .backbone import (
    find_classification_head,
    load_backbone,
    replace_classification_head,
    run_inference,
)
from .export import (
    SCREENING_CLASS_NAMES,
    class_names_for,
    export_features,
    export_head,
    head_to_linear,
)
from .manifest import (
    CROP_POLICIES,
    IMAGENET_MEAN,
    IMAGENET_STD,
    ExportManifest,
    SampleEntry,
    effective_document,
    load_manifest,
)
from .preprocess import center_square_crop, preprocess, preprocess_file

__version__ = "1.0.0"

__all__ = [
    "CROP_POLICIES",
    "ExportManifest",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "SCREENING_CLASS_NAMES",
    "SampleEntry",
    "center_square_crop",
    "class_names_for",
    "effective_document",
    "export_features",
    "export_head",
    "find_classification_head",
    "head_to_linear",
    "load_backbone",
    "load_manifest",
    "preprocess",
    "preprocess_file",
    "replace_classification_head",
    "run_inference",
    "__version__",
]
