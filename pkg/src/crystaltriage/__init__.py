"""Crystallization trial image triage: corpus tooling, a small CNN stack,
training/evaluation, and a review service."""

__version__ = "0.1.0"

from .augment import (
    BalancePlan,
    augment_dataset,
    balance_plan,
    center_crop,
    derive_seed,
    downsample,
    preprocess,
    random_orientation,
    to_grayscale,
)
from .corpus import (
    CRYSTAL_IDS,
    LABELS,
    NUM_CLASSES,
    ClassLabel,
    ImageRecord,
    Manifest,
    ManifestError,
    class_histogram,
    crystal_fraction,
    label_by_id,
    label_by_name,
    load_manifest,
    make_manifest,
    save_manifest,
    stratified_split,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    MetricsError,
    PredictionRecord,
    confusion_matrix,
    load_predictions,
    missed_crystal_rate,
    one_vs_rest_auc,
    per_class_accuracy,
    rank_labels,
    report,
    roc_auc,
    topn_accuracy,
    write_predictions,
    write_report,
)
from .service import (
    AnnotationEvent,
    ServiceConfig,
    ServiceError,
    TriageItem,
    TriageService,
)
from .synth import SynthSpec, generate, parse_counts, render_image
from .trainer import TrainConfig, TrainingError, TrainResult, lr_at, train
from .zoo import (
    ARCHITECTURES,
    Model,
    ModelSpec,
    ZooError,
    build,
    checkpoint_digest,
    load_checkpoint,
    predict_probabilities,
    save_checkpoint,
)

__all__ = [
    "ARCHITECTURES",
    "AnnotationEvent",
    "BalancePlan",
    "CRYSTAL_IDS",
    "ClassLabel",
    "ConfusionMatrix",
    "EvalReport",
    "ImageRecord",
    "LABELS",
    "Manifest",
    "ManifestError",
    "MetricsError",
    "Model",
    "ModelSpec",
    "NUM_CLASSES",
    "PredictionRecord",
    "ServiceConfig",
    "ServiceError",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "TriageItem",
    "TriageService",
    "ZooError",
    "augment_dataset",
    "balance_plan",
    "build",
    "center_crop",
    "checkpoint_digest",
    "class_histogram",
    "confusion_matrix",
    "crystal_fraction",
    "derive_seed",
    "downsample",
    "generate",
    "label_by_id",
    "label_by_name",
    "load_checkpoint",
    "load_manifest",
    "load_predictions",
    "lr_at",
    "make_manifest",
    "missed_crystal_rate",
    "one_vs_rest_auc",
    "parse_counts",
    "per_class_accuracy",
    "predict_probabilities",
    "preprocess",
    "random_orientation",
    "rank_labels",
    "render_image",
    "report",
    "roc_auc",
    "save_checkpoint",
    "save_manifest",
    "stratified_split",
    "to_grayscale",
    "topn_accuracy",
    "train",
    "write_predictions",
    "write_report",
    "__version__",
]
