"""Image tensors: decoding, resizing, normalization, and input adaptation.

A single bilinear resampler backs every geometric resize in the package so
that behaviour (constant-image invariance, identity at equal sizes) is
uniform and testable.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import ConfigurationError, ImageLoadError, UsageError

RAW = "raw_0_255"
UNIT = "unit_0_1"
SYMMETRIC = "symmetric_neg1_1"

NORMALIZATION_RANGES = {
    RAW: (0.0, 255.0),
    UNIT: (0.0, 1.0),
    SYMMETRIC: (-1.0, 1.0),
}

MIN_ADAPTER_TARGET = 8

ADAPTER_POLICIES = ("resize", "center_crop", "pad_to_fit")


@dataclass
class ImageTensor:
    """An H x W x 3 array of pixel values with an explicit normalization state."""

    values: np.ndarray
    normalization: str = RAW

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise UsageError(f"image tensor must have shape (H, W, 3), got {self.values.shape}")
        if self.normalization not in NORMALIZATION_RANGES:
            raise UsageError(f"unknown normalization {self.normalization!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def value_range(self) -> tuple[float, float]:
        return NORMALIZATION_RANGES[self.normalization]


@dataclass(frozen=True)
class InputAdapterPolicy:
    """How arbitrary-size inputs are brought to the backbone's spatial size."""

    policy: str = "resize"
    target: tuple[int, int] = (224, 224)

    def __post_init__(self):
        if self.policy not in ADAPTER_POLICIES:
            raise ConfigurationError(
                f"unknown adapter policy {self.policy!r}, expected one of {ADAPTER_POLICIES}"
            )
        target = (int(self.target[0]), int(self.target[1]))
        object.__setattr__(self, "target", target)
        if min(target) < MIN_ADAPTER_TARGET:
            raise ConfigurationError(
                f"adapter target must be at least {MIN_ADAPTER_TARGET}x{MIN_ADAPTER_TARGET}, got {target}"
            )


def _axis_indices(n_src: int, n_dst: int):
    # Pixel-center convention: dst center x maps to (x + 0.5) * scale - 0.5.
    x = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    lo = np.floor(x)
    frac = x - lo
    i0 = np.clip(lo, 0, n_src - 1).astype(int)
    i1 = np.clip(lo + 1, 0, n_src - 1).astype(int)
    return i0, i1, frac


def bilinear_resize(values: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize an (H, W, C) array with bilinear interpolation.

    Exact identity when the size is unchanged; exact on constant images
    (interpolation is written as v0 + f * (v1 - v0)).
    """
    th, tw = int(size[0]), int(size[1])
    h, w = values.shape[:2]
    if (h, w) == (th, tw):
        return values.copy()
    if th < 1 or tw < 1:
        raise UsageError(f"resize target must be positive, got {(th, tw)}")
    r0, r1, fr = _axis_indices(h, th)
    c0, c1, fc = _axis_indices(w, tw)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    rows0 = values[r0]
    rows1 = values[r1]
    top = rows0[:, c0] + fc * (rows0[:, c1] - rows0[:, c0])
    bottom = rows1[:, c0] + fc * (rows1[:, c1] - rows1[:, c0])
    return top + fr * (bottom - top)


def load_image(source, target: tuple[int, int] | None = None) -> ImageTensor:
    """Decode an image file into a raw-intensity tensor, optionally resized.

    Grayscale sources are replicated to three channels. ``source`` may be a
    path or any object with a ``path`` attribute (an ImageRecord).
    """
    path = getattr(source, "path", source)
    path = os.fspath(path)
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            values = np.asarray(rgb, dtype=float)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageLoadError(path, str(exc)) from exc
    if target is not None:
        values = bilinear_resize(values, target)
    return ImageTensor(values=values, normalization=RAW)


def normalize(t: ImageTensor, scheme: str) -> ImageTensor:
    """Rescale a raw tensor into the requested normalization scheme."""
    if scheme not in NORMALIZATION_RANGES:
        raise UsageError(f"unknown normalization scheme {scheme!r}")
    if t.normalization != RAW:
        raise UsageError(
            f"normalize expects a {RAW} tensor, got {t.normalization!r} (double normalization?)"
        )
    if scheme == RAW:
        return ImageTensor(values=t.values.copy(), normalization=RAW)
    if scheme == UNIT:
        return ImageTensor(values=t.values / 255.0, normalization=UNIT)
    return ImageTensor(values=t.values / 127.5 - 1.0, normalization=SYMMETRIC)


def _center_crop(values: np.ndarray, th: int, tw: int) -> np.ndarray:
    h, w = values.shape[:2]
    if h < th or w < tw:
        # Upscale to cover the target before cropping so the output size law
        # holds for undersized inputs.
        scale = max(th / h, tw / w)
        nh = max(th, int(round(h * scale)))
        nw = max(tw, int(round(w * scale)))
        values = bilinear_resize(values, (nh, nw))
        h, w = nh, nw
    top = (h - th) // 2
    left = (w - tw) // 2
    return values[top : top + th, left : left + tw].copy()


def _pad_to_fit(values: np.ndarray, th: int, tw: int) -> np.ndarray:
    h, w = values.shape[:2]
    scale = min(th / h, tw / w)
    ch = min(th, max(1, int(round(h * scale))))
    cw = min(tw, max(1, int(round(w * scale))))
    content = bilinear_resize(values, (ch, cw))
    fill = float(values.mean())
    canvas = np.full((th, tw, values.shape[2]), fill, dtype=float)
    # Odd padding puts the extra pixel on the bottom/right.
    top = (th - ch) // 2
    left = (tw - cw) // 2
    canvas[top : top + ch, left : left + cw] = content
    return canvas


def adapt_input(t: ImageTensor, policy: InputAdapterPolicy) -> ImageTensor:
    """Bring a decoded tensor to the policy's target spatial size.

    The normalization state is preserved; only geometry changes.
    """
    th, tw = policy.target
    if (t.height, t.width) == (th, tw):
        return ImageTensor(values=t.values.copy(), normalization=t.normalization)
    if policy.policy == "resize":
        out = bilinear_resize(t.values, (th, tw))
    elif policy.policy == "center_crop":
        out = _center_crop(t.values, th, tw)
    else:
        out = _pad_to_fit(t.values, th, tw)
    return ImageTensor(values=out, normalization=t.normalization)
