"""ember: a transfer-learning pipeline for fire / no-fire image classification.

Dataset ingestion and deterministic stratified splits, seeded augmentation
and batching, a pre-trained backbone contract with a custom classification
head, a fine-tuning loop with freeze/unfreeze schedules and early stopping,
from-scratch evaluation metrics, and the CLI / plotting layer that renders
the run artifacts.
"""
from .augment import AugmentationSpec, augment
from .backbone import BACKBONES, BackboneContract, ToyBackbone, create_backbone
from .batches import Batch, Preprocessor, make_batches
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import (
    DatasetIndex,
    ImageRecord,
    SplitAssignment,
    load_split_manifest,
    save_split_manifest,
    scan_dataset,
    scan_presplit,
    split_dataset,
)
from .estimator import FireClassifier
from .evaluate import EvaluationReport, evaluate
from .exceptions import (
    CheckpointError,
    ConfigurationError,
    DatasetError,
    EmberError,
    EvaluationError,
    ImageLoadError,
    TrainingDivergedError,
    UsageError,
)
from .images import ImageTensor, InputAdapterPolicy, adapt_input, bilinear_resize, load_image, normalize
from .losses import binary_cross_entropy, binary_cross_entropy_gradient
from .metrics import ConfusionMatrix, RocCurve, auc, confusion_matrix, derived_metrics, roc_curve
from .model import (
    ClassifierModel,
    HeadConfig,
    UnfreezeStage,
    assemble,
    build_head,
    predict_proba,
    resolve_stage,
    set_trainability,
)
from .optimizer import Adam
from .training import (
    EarlyStoppingConfig,
    EpochMetrics,
    OptimizerConfig,
    TrainingConfig,
    TrainingHistory,
    apply_unfreeze_schedule,
    early_stop_check,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AugmentationSpec",
    "BACKBONES",
    "BackboneContract",
    "Batch",
    "CheckpointError",
    "ClassifierModel",
    "ConfigurationError",
    "ConfusionMatrix",
    "DatasetError",
    "DatasetIndex",
    "EarlyStoppingConfig",
    "EmberError",
    "EpochMetrics",
    "EvaluationError",
    "EvaluationReport",
    "FireClassifier",
    "HeadConfig",
    "ImageLoadError",
    "ImageRecord",
    "ImageTensor",
    "InputAdapterPolicy",
    "OptimizerConfig",
    "Preprocessor",
    "RocCurve",
    "SplitAssignment",
    "ToyBackbone",
    "TrainingConfig",
    "TrainingDivergedError",
    "TrainingHistory",
    "UnfreezeStage",
    "UsageError",
    "adapt_input",
    "apply_unfreeze_schedule",
    "assemble",
    "auc",
    "augment",
    "bilinear_resize",
    "binary_cross_entropy",
    "binary_cross_entropy_gradient",
    "build_head",
    "confusion_matrix",
    "create_backbone",
    "derived_metrics",
    "early_stop_check",
    "evaluate",
    "load_checkpoint",
    "load_image",
    "load_split_manifest",
    "make_batches",
    "normalize",
    "predict_proba",
    "resolve_stage",
    "roc_curve",
    "save_checkpoint",
    "save_split_manifest",
    "scan_dataset",
    "scan_presplit",
    "set_trainability",
    "split_dataset",
    "train",
]
