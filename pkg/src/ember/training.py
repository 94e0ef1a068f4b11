"""The fine-tuning loop: optimization, per-epoch metrics, early stopping,
progressive unfreezing, and best-epoch tracking.

Runs are bit-reproducible for a fixed (config, seed, device): batch order,
augmentation draws, and dropout draws all derive from the config seed
through tagged numpy seed sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .augment import AugmentationSpec
from .batches import Batch, Preprocessor, make_batches
from .dataset import SplitAssignment
from .exceptions import ConfigurationError, TrainingDivergedError
from .losses import binary_cross_entropy, categorical_cross_entropy
from .model import ClassifierModel, activate, resolve_stage
from .optimizer import Adam

MONITORS = ("val_loss", "val_accuracy")

# Stream tags keep the dropout draws distinct from batch-order draws.
_DROPOUT_STREAM = 101


@dataclass(frozen=True)
class OptimizerConfig:
    name: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.name != "adam":
            raise ConfigurationError(f"unsupported optimizer {self.name!r}")


@dataclass(frozen=True)
class EarlyStoppingConfig:
    enabled: bool = False
    monitor: str = "val_loss"
    patience: int = 10
    min_delta: float = 0.0

    def __post_init__(self):
        if self.monitor not in MONITORS:
            raise ConfigurationError(f"monitor must be one of {MONITORS}, got {self.monitor!r}")
        if self.enabled and self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1 when early stopping is enabled")
        if self.min_delta < 0:
            raise ConfigurationError(f"min_delta must be >= 0, got {self.min_delta}")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-5
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    early_stopping: EarlyStoppingConfig = field(default_factory=EarlyStoppingConfig)
    unfreeze_schedule: tuple[tuple[int, str], ...] = ((0, "head_only"),)
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        schedule = tuple((int(e), str(s)) for e, s in self.unfreeze_schedule)
        object.__setattr__(self, "unfreeze_schedule", schedule)
        if not schedule:
            raise ConfigurationError("unfreeze_schedule must not be empty")
        epochs = [e for e, _ in schedule]
        if epochs[0] != 0:
            raise ConfigurationError("unfreeze_schedule must start at epoch 0")
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ConfigurationError("unfreeze_schedule epochs must be strictly increasing")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    active_stage: str

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "train_accuracy": self.train_accuracy,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
            "active_stage": self.active_stage,
        }


@dataclass
class TrainingHistory:
    entries: list[EpochMetrics] = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = 0

    def monitored(self, monitor: str) -> list[float]:
        if monitor not in MONITORS:
            raise ConfigurationError(f"monitor must be one of {MONITORS}, got {monitor!r}")
        return [getattr(e, monitor) for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "entries": [e.as_dict() for e in self.entries],
            "stopped_early": self.stopped_early,
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingHistory":
        entries = [
            EpochMetrics(
                epoch=e["epoch"],
                train_loss=e["train_loss"],
                train_accuracy=e["train_accuracy"],
                val_loss=e["val_loss"],
                val_accuracy=e["val_accuracy"],
                active_stage=e["active_stage"],
            )
            for e in data.get("entries", [])
        ]
        return cls(
            entries=entries,
            stopped_early=bool(data.get("stopped_early", False)),
            best_epoch=int(data.get("best_epoch", 0)),
        )


def early_stop_check(history, monitor: str, patience: int, min_delta: float) -> bool:
    """True iff the monitored value failed to improve by more than ``min_delta``
    for ``patience`` consecutive epochs past the last improvement.

    ``history`` may be a TrainingHistory or a plain sequence of monitored
    values (useful for scripted traces).
    """
    if monitor not in MONITORS:
        raise ConfigurationError(f"monitor must be one of {MONITORS}, got {monitor!r}")
    if isinstance(history, TrainingHistory):
        values: Sequence[float] = history.monitored(monitor)
    else:
        values = list(history)
    if not values:
        raise ConfigurationError("early_stop_check requires a non-empty history")
    sign = 1.0 if monitor == "val_loss" else -1.0
    best = math.inf
    best_epoch = 0
    for epoch, value in enumerate(values):
        if sign * value < best - min_delta:
            best = sign * value
            best_epoch = epoch
    return (len(values) - 1) - best_epoch >= patience


def apply_unfreeze_schedule(schedule, epoch: int, model: ClassifierModel) -> str:
    """Apply the stage whose epoch is the largest one <= the current epoch."""
    active = schedule[0][1]
    for stage_epoch, stage_name in schedule:
        if stage_epoch <= epoch:
            active = stage_name
        else:
            break
    stage = resolve_stage(active, model.backbone.parameter_groups)
    model.set_trainability(stage)
    return active


def _batch_loss_and_grad(model: ClassifierModel, logits: np.ndarray, labels: np.ndarray):
    """Loss, probabilities, correct-count, and d(loss)/d(logits) for one batch."""
    mode = model.head_cfg.mode
    probs = activate(logits, mode)
    targets = model.targets_for(labels)
    n = len(labels)
    if mode == "binary_sigmoid":
        loss = binary_cross_entropy(probs, targets.astype(int))
        grad = ((probs - targets) / n)[:, None]
        correct = int(np.sum((probs >= 0.5) == (targets == 1.0)))
    elif mode == "multiclass_softmax":
        loss = categorical_cross_entropy(probs, targets)
        onehot = np.zeros_like(probs)
        onehot[np.arange(n), targets] = 1.0
        grad = (probs - onehot) / n
        correct = int(np.sum(probs.argmax(axis=1) == targets))
    else:  # multilabel_sigmoid: mean BCE over every entry
        loss = binary_cross_entropy(probs.ravel(), targets.astype(int).ravel())
        grad = (probs - targets) / targets.size
        correct = int(np.sum(np.all((probs >= 0.5) == (targets == 1.0), axis=1)))
    return loss, probs, correct, grad


def _evaluate_stream(model: ClassifierModel, batches: list[Batch]) -> tuple[float, float]:
    total_loss = 0.0
    total_correct = 0
    total = 0
    for batch in batches:
        logits = model.forward_logits(batch.images, training=False)
        loss, _, correct, _ = _batch_loss_and_grad(model, logits, batch.labels)
        total_loss += loss * len(batch)
        total_correct += correct
        total += len(batch)
    return total_loss / total, total_correct / total


def train(
    model: ClassifierModel,
    splits: SplitAssignment,
    cfg: TrainingConfig,
    *,
    augmentation: AugmentationSpec | None = None,
    checkpoint_dir=None,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
    preprocess: Preprocessor | None = None,
) -> tuple[ClassifierModel, TrainingHistory]:
    """Fine-tune ``model`` on the split's train stream.

    Stage transitions happen at epoch boundaries before that epoch's first
    batch. The best epoch (minimum validation loss, earliest tie) is tracked
    throughout; if ``checkpoint_dir`` is given, ``best/`` and ``final/``
    checkpoints are written there. The returned model carries the
    final-epoch weights.
    """
    from .checkpoint import save_checkpoint  # local import to avoid a cycle

    if not splits.train:
        raise ConfigurationError("training stream is empty")
    if not splits.validation:
        raise ConfigurationError(
            "validation stream is empty; pass a split with validation records "
            "(the test stream may double as validation)"
        )
    if preprocess is None:
        preprocess = Preprocessor(model.adapter, model.normalization)
    optimizer = Adam(
        learning_rate=cfg.learning_rate,
        beta1=cfg.optimizer.beta1,
        beta2=cfg.optimizer.beta2,
        epsilon=cfg.optimizer.epsilon,
    )
    history = TrainingHistory()
    best_val = math.inf
    best_snapshot = None
    for epoch in range(cfg.epochs):
        stage = apply_unfreeze_schedule(cfg.unfreeze_schedule, epoch, model)
        train_batches = make_batches(
            splits.train,
            cfg.batch_size,
            shuffle=True,
            seed=cfg.seed,
            spec=augmentation,
            epoch=epoch,
            preprocess=preprocess,
        )
        running_loss = 0.0
        running_correct = 0
        seen = 0
        for step, batch in enumerate(train_batches):
            rng = np.random.default_rng([cfg.seed, _DROPOUT_STREAM, epoch, step])
            logits = model.forward_logits(batch.images, training=True, rng=rng)
            if not np.all(np.isfinite(logits)):
                raise TrainingDivergedError(epoch, step, float(logits.ravel()[0]))
            loss, _, correct, grad = _batch_loss_and_grad(model, logits, batch.labels)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, step, loss)
            model.zero_grad()
            model.backward(grad)
            optimizer.step(model.trainable_parameters())
            running_loss += loss * len(batch)
            running_correct += correct
            seen += len(batch)
        val_batches = make_batches(
            splits.validation, cfg.batch_size, shuffle=False, seed=cfg.seed, preprocess=preprocess
        )
        val_loss, val_accuracy = _evaluate_stream(model, val_batches)
        entry = EpochMetrics(
            epoch=epoch,
            train_loss=running_loss / seen,
            train_accuracy=running_correct / seen,
            val_loss=val_loss,
            val_accuracy=val_accuracy,
            active_stage=stage,
        )
        history.entries.append(entry)
        if on_epoch is not None:
            on_epoch(entry)
        if val_loss < best_val:
            best_val = val_loss
            history.best_epoch = epoch
            best_snapshot = {name: p.value.copy() for name, p in model.all_parameters()}
        es = cfg.early_stopping
        if es.enabled and early_stop_check(history, es.monitor, es.patience, es.min_delta):
            history.stopped_early = True
            break
    if checkpoint_dir is not None:
        from pathlib import Path

        checkpoint_dir = Path(checkpoint_dir)
        save_checkpoint(model, history, checkpoint_dir / "final")
        if best_snapshot is not None:
            final_values = {name: p.value.copy() for name, p in model.all_parameters()}
            _load_values(model, best_snapshot)
            save_checkpoint(model, history, checkpoint_dir / "best")
            _load_values(model, final_values)
    return model, history


def _load_values(model: ClassifierModel, values: dict[str, np.ndarray]) -> None:
    for name, p in model.all_parameters():
        p.value = values[name].copy()
