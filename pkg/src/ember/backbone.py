"""Pre-trained feature-extractor backbones behind a uniform contract.

A backbone declares its expected input geometry and normalization, its
output feature-map shape, and an ordered list of parameter groups (earliest
to latest layers) that freeze/unfreeze schedules refer to. Heavy published
backbones enter through this contract from serialized weights; the package
ships a small randomly initialized ``toy`` backbone so the full pipeline can
be exercised without downloading anything.
"""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .exceptions import CheckpointError, ConfigurationError, UsageError
from .images import UNIT
from .layers import Conv2d, Layer, MaxPool2x2, Parameter, ReLU


class BackboneContract(ABC):
    """Contract every feature extractor satisfies."""

    name: str
    expected_input: tuple[int, int, int]
    expected_normalization: str
    feature_shape: tuple[int, int, int]

    @property
    @abstractmethod
    def parameter_groups(self) -> tuple[str, ...]:
        """Ordered group names, earliest layers first."""

    @abstractmethod
    def parameters_by_group(self) -> dict[str, list[Parameter]]:
        ...

    @abstractmethod
    def forward(self, x: np.ndarray, *, cache: bool = False) -> np.ndarray:
        ...

    @abstractmethod
    def backward(self, grad_features: np.ndarray, *, earliest_group: int = 0) -> None:
        """Backpropagate into parameter gradients (input gradient is discarded)."""

    def parameters(self) -> list[Parameter]:
        return [p for group in self.parameters_by_group().values() for p in group]


class ToyBackbone(BackboneContract):
    """Three seeded conv blocks: 224x224x3 -> 7x7x64.

    block1: conv(3->16, /2) + relu + pool  -> 56x56x16
    block2: conv(16->32, /2) + relu + pool -> 14x14x32
    block3: conv(32->64, /2) + relu        -> 7x7x64
    """

    name = "toy"
    expected_input = (224, 224, 3)
    expected_normalization = UNIT
    feature_shape = (7, 7, 64)

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self._groups: dict[str, list[Layer]] = {
            "block1": [Conv2d(3, 16, stride=2, rng=rng, name="block1.conv"), ReLU(), MaxPool2x2()],
            "block2": [Conv2d(16, 32, stride=2, rng=rng, name="block2.conv"), ReLU(), MaxPool2x2()],
            "block3": [Conv2d(32, 64, stride=2, rng=rng, name="block3.conv"), ReLU()],
        }

    @property
    def parameter_groups(self) -> tuple[str, ...]:
        return tuple(self._groups)

    def parameters_by_group(self) -> dict[str, list[Parameter]]:
        return {
            group: [p for layer in layers for p in layer.params]
            for group, layers in self._groups.items()
        }

    def _layers(self) -> list[tuple[int, Layer]]:
        return [(gi, layer) for gi, layers in enumerate(self._groups.values()) for layer in layers]

    def forward(self, x: np.ndarray, *, cache: bool = False) -> np.ndarray:
        expected_hw = self.expected_input[:2]
        if x.ndim != 4 or x.shape[1:3] != expected_hw or x.shape[3] != self.expected_input[2]:
            raise UsageError(
                f"backbone {self.name!r} expects input (B, {self.expected_input[0]}, "
                f"{self.expected_input[1]}, {self.expected_input[2]}), got {x.shape}"
            )
        out = x
        for _, layer in self._layers():
            out = layer.forward(out, cache=cache)
        return out

    def backward(self, grad_features: np.ndarray, *, earliest_group: int = 0) -> None:
        grad = grad_features
        for group_index, layer in reversed(self._layers()):
            if group_index < earliest_group:
                break
            grad = layer.backward(grad)


BACKBONES = {"toy": ToyBackbone}


def create_backbone(name: str, seed: int = 0, *, for_checkpoint: bool = False) -> BackboneContract:
    if name not in BACKBONES:
        error = CheckpointError if for_checkpoint else ConfigurationError
        raise error(f"unknown backbone {name!r}; registered backbones: {sorted(BACKBONES)}")
    return BACKBONES[name](seed=seed)
