"""Classifier assembly: backbone + classification head + trainability control.

The head is the standard transfer-learning attachment: global average
pooling, a hidden fully connected layer with ReLU, dropout, and a task
output layer (single sigmoid unit, softmax over classes, or independent
sigmoids for multi-label).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import BackboneContract
from .batches import Batch
from .exceptions import ConfigurationError, UsageError
from .images import InputAdapterPolicy
from .layers import Dense, Dropout, GlobalAveragePool, Parameter, ReLU, sigmoid, softmax

HEAD_MODES = ("binary_sigmoid", "multiclass_softmax", "multilabel_sigmoid")

HEAD_GROUP = "head"


@dataclass(frozen=True)
class HeadConfig:
    mode: str = "binary_sigmoid"
    hidden_units: int = 128
    dropout_rate: float = 0.2
    num_classes: int = 2

    def __post_init__(self):
        if self.mode not in HEAD_MODES:
            raise ConfigurationError(f"unknown head mode {self.mode!r}, expected one of {HEAD_MODES}")
        if self.hidden_units < 1:
            raise ConfigurationError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.num_classes < 1:
            raise ConfigurationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.mode == "multiclass_softmax" and self.num_classes < 2:
            raise ConfigurationError("multiclass_softmax requires num_classes >= 2")

    @property
    def output_dim(self) -> int:
        return 1 if self.mode == "binary_sigmoid" else self.num_classes


class ClassificationHead:
    """GAP -> dense(hidden, ReLU) -> dropout -> output layer."""

    def __init__(self, cfg: HeadConfig, feature_channels: int, seed: int = 0):
        if feature_channels < 1:
            raise ConfigurationError(f"feature_channels must be >= 1, got {feature_channels}")
        self.cfg = cfg
        self.feature_channels = feature_channels
        rng = np.random.default_rng(seed)
        self.gap = GlobalAveragePool()
        self.hidden = Dense(feature_channels, cfg.hidden_units, rng=rng, name="head.hidden")
        self.relu = ReLU()
        self.dropout = Dropout(cfg.dropout_rate)
        self.output = Dense(cfg.hidden_units, cfg.output_dim, rng=rng, name="head.output")
        self._layers = (self.gap, self.hidden, self.relu, self.dropout, self.output)

    def parameters(self) -> list[Parameter]:
        return [p for layer in self._layers for p in layer.params]

    def parameter_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def forward(self, features: np.ndarray, *, training: bool = False, rng=None, cache: bool = False) -> np.ndarray:
        out = features
        for layer in self._layers:
            out = layer.forward(out, training=training, rng=rng, cache=cache)
        return out

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        grad = grad_logits
        for layer in reversed(self._layers):
            grad = layer.backward(grad)
        return grad


def build_head(cfg: HeadConfig, feature_channels: int, seed: int = 0) -> ClassificationHead:
    """Construct the classification head for a feature map with the given channels."""
    return ClassificationHead(cfg, feature_channels, seed=seed)


@dataclass(frozen=True)
class UnfreezeStage:
    """A named trainability stage: which backbone groups train alongside the head."""

    name: str
    trainable_groups: tuple[str, ...] = ()


def resolve_stage(name: str, group_names: tuple[str, ...]) -> UnfreezeStage:
    """Resolve a stage string against a backbone's parameter groups.

    Supported forms: ``head_only``, ``all``, and ``last_<n>`` for the last
    ``n`` backbone groups.
    """
    if name == "head_only":
        return UnfreezeStage(name, ())
    if name == "all":
        return UnfreezeStage(name, tuple(group_names))
    if name.startswith("last_"):
        try:
            n = int(name.split("_", 1)[1])
        except ValueError:
            raise ConfigurationError(f"malformed stage name {name!r}")
        if not 1 <= n <= len(group_names):
            raise ConfigurationError(
                f"stage {name!r} out of range for {len(group_names)} backbone groups"
            )
        return UnfreezeStage(name, tuple(group_names[-n:]))
    raise ConfigurationError(
        f"unknown stage {name!r}; expected 'head_only', 'all', or 'last_<n>'"
    )


def activate(logits: np.ndarray, mode: str) -> np.ndarray:
    if mode == "binary_sigmoid":
        return sigmoid(logits[:, 0])
    if mode == "multiclass_softmax":
        return softmax(logits)
    return sigmoid(logits)


class ClassifierModel:
    """A backbone and head wired together, with per-group trainability flags."""

    def __init__(
        self,
        backbone: BackboneContract,
        head: ClassificationHead,
        adapter: InputAdapterPolicy,
        normalization: str,
        class_names: tuple[str, ...] | None = None,
        positive_class: str | None = None,
    ):
        self.backbone = backbone
        self.head = head
        self.head_cfg = head.cfg
        self.adapter = adapter
        self.normalization = normalization
        if class_names is None and head.cfg.mode == "binary_sigmoid":
            class_names = ("fire", "nofire")
        self.class_names = tuple(class_names) if class_names else ()
        if positive_class is None:
            positive_class = _default_positive(self.class_names)
        self.positive_class = positive_class
        self.trainability: dict[str, bool] = {g: False for g in backbone.parameter_groups}
        self.trainability[HEAD_GROUP] = True
        self.stage_name = "head_only"

    # -- trainability -----------------------------------------------------

    def set_trainability(self, stage: UnfreezeStage) -> None:
        known = set(self.backbone.parameter_groups)
        unknown = [g for g in stage.trainable_groups if g not in known]
        if unknown:
            raise ConfigurationError(
                f"stage {stage.name!r} references unknown parameter groups {unknown}; "
                f"backbone groups: {sorted(known)}"
            )
        for group in self.backbone.parameter_groups:
            self.trainability[group] = group in stage.trainable_groups
        self.trainability[HEAD_GROUP] = True
        self.stage_name = stage.name

    def parameters_by_group(self) -> dict[str, list[Parameter]]:
        groups = dict(self.backbone.parameters_by_group())
        groups[HEAD_GROUP] = self.head.parameters()
        return groups

    def all_parameters(self) -> list[tuple[str, Parameter]]:
        out = []
        for group, params in self.parameters_by_group().items():
            out.extend((f"{group}/{p.name}", p) for p in params)
        return out

    def trainable_parameters(self) -> list[Parameter]:
        return [
            p
            for group, params in self.parameters_by_group().items()
            if self.trainability.get(group, False)
            for p in params
        ]

    def zero_grad(self) -> None:
        for _, p in self.all_parameters():
            p.zero_grad()

    def _backbone_trainable(self) -> bool:
        return any(self.trainability[g] for g in self.backbone.parameter_groups)

    # -- forward / backward ------------------------------------------------

    def forward_logits(self, images: np.ndarray, *, training: bool = False, rng=None) -> np.ndarray:
        cache_backbone = training and self._backbone_trainable()
        features = self.backbone.forward(images, cache=cache_backbone)
        return self.head.forward(features, training=training, rng=rng, cache=training)

    def backward(self, grad_logits: np.ndarray) -> None:
        grad_features = self.head.backward(grad_logits)
        if self._backbone_trainable():
            groups = self.backbone.parameter_groups
            earliest = min(i for i, g in enumerate(groups) if self.trainability[g])
            self.backbone.backward(grad_features, earliest_group=earliest)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        if batch.normalization != self.normalization:
            raise UsageError(
                f"batch normalization {batch.normalization!r} does not match the "
                f"model's expected {self.normalization!r}"
            )
        logits = self.forward_logits(batch.images, training=False)
        return activate(logits, self.head_cfg.mode)

    def positive_index(self) -> int:
        if self.positive_class in self.class_names:
            return self.class_names.index(self.positive_class)
        return 0

    def targets_for(self, label_indices: np.ndarray) -> np.ndarray:
        """Map batch label indices to training targets for the head mode."""
        if self.head_cfg.mode == "binary_sigmoid":
            return (label_indices == self.positive_index()).astype(float)
        if self.head_cfg.mode == "multiclass_softmax":
            return label_indices.astype(int)
        onehot = np.zeros((len(label_indices), self.head_cfg.num_classes))
        onehot[np.arange(len(label_indices)), label_indices] = 1.0
        return onehot


def _default_positive(class_names: tuple[str, ...]) -> str:
    if not class_names:
        return "fire"
    if "fire" in class_names:
        return "fire"
    return class_names[0]


def assemble(
    backbone: BackboneContract,
    head_cfg: HeadConfig,
    adapter: InputAdapterPolicy,
    seed: int = 0,
    class_names: tuple[str, ...] | None = None,
    positive_class: str | None = None,
    normalization: str | None = None,
) -> ClassifierModel:
    """Wire a backbone and a fresh head into a classifier.

    The adapter target must match the backbone's expected spatial size. The
    initial trainability is all backbone groups frozen, head trainable.
    """
    if tuple(adapter.target) != tuple(backbone.expected_input[:2]):
        raise ConfigurationError(
            f"adapter target {adapter.target} does not match backbone input "
            f"{backbone.expected_input[:2]}"
        )
    head = build_head(head_cfg, backbone.feature_shape[2], seed=seed)
    return ClassifierModel(
        backbone=backbone,
        head=head,
        adapter=adapter,
        normalization=normalization or backbone.expected_normalization,
        class_names=class_names,
        positive_class=positive_class,
    )


def set_trainability(model: ClassifierModel, stage: UnfreezeStage) -> ClassifierModel:
    """Apply a trainability stage to the model and return it."""
    model.set_trainability(stage)
    return model


def predict_proba(model: ClassifierModel, batch: Batch) -> np.ndarray:
    """Deterministic inference-mode probabilities for a preprocessed batch."""
    return model.predict_proba(batch)
