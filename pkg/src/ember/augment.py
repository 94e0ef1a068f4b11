"""Seeded image augmentation for the training stream.

The transformation applied to a tensor is a pure function of the tensor, the
spec, and the state of the random-draw handle, so identical draw states give
identical outputs. Labels are never touched here: augmentation operates on
pixels only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import ConfigurationError
from .images import NORMALIZATION_RANGES, ImageTensor


@dataclass(frozen=True)
class AugmentationSpec:
    """Magnitudes for each augmentation component; zero means identity."""

    rotation_max_degrees: float = 0.0
    zoom_range: float = 0.0
    horizontal_flip: bool = False
    brightness_jitter: float = 0.0
    gaussian_noise_stddev: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("rotation_max_degrees", "zoom_range", "brightness_jitter", "gaussian_noise_stddev"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value!r}")

    def is_identity(self) -> bool:
        return (
            self.rotation_max_degrees == 0
            and self.zoom_range == 0
            and not self.horizontal_flip
            and self.brightness_jitter == 0
            and self.gaussian_noise_stddev == 0
        )


def horizontal_flip(values: np.ndarray) -> np.ndarray:
    """Mirror an (H, W, C) array left-right. Applying it twice is the identity."""
    return values[:, ::-1].copy()


def augment(t: ImageTensor, spec: AugmentationSpec, draw: np.random.Generator) -> ImageTensor:
    """Apply the spec's transformations in a fixed order, then clip to range.

    Order: rotation, zoom, horizontal flip, brightness, Gaussian noise. Each
    component consumes draws only when enabled, and pixels exposed by the
    geometric transforms are filled with the image mean.
    """
    values = t.values
    lo, hi = NORMALIZATION_RANGES[t.normalization]
    if spec.is_identity():
        return ImageTensor(values=values.copy(), normalization=t.normalization)
    fill = float(values.mean())
    if spec.rotation_max_degrees > 0:
        angle = draw.uniform(-spec.rotation_max_degrees, spec.rotation_max_degrees)
        values = ndimage.rotate(
            values, angle, axes=(1, 0), reshape=False, order=1, mode="constant", cval=fill
        )
    if spec.zoom_range > 0:
        factor = 1.0 + draw.uniform(-spec.zoom_range, spec.zoom_range)
        inv = 1.0 / factor
        h, w = values.shape[:2]
        center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
        offset = np.array([center[0] * (1 - inv), center[1] * (1 - inv), 0.0])
        values = ndimage.affine_transform(
            values,
            np.diag([inv, inv, 1.0]),
            offset=offset,
            order=1,
            mode="constant",
            cval=fill,
        )
    if spec.horizontal_flip and draw.random() < 0.5:
        values = horizontal_flip(values)
    if spec.brightness_jitter > 0:
        values = values * (1.0 + draw.uniform(-spec.brightness_jitter, spec.brightness_jitter))
    if spec.gaussian_noise_stddev > 0:
        values = values + draw.normal(0.0, spec.gaussian_noise_stddev, size=values.shape)
    values = np.clip(values, lo, hi)
    return ImageTensor(values=values, normalization=t.normalization)
