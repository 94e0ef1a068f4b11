"""Minimal neural-network layers with explicit forward/backward passes.

Everything runs in float64 numpy. Arrays are laid out channels-last:
activations are (B, H, W, C), convolution weights are (k, k, C_in, C_out).
Each layer caches what its backward pass needs during ``forward(...,
cache=True)``; parameter gradients accumulate into ``Parameter.grad``.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import UsageError


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=-1, keepdims=True)


class Parameter:
    """A trainable array plus its accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=float)
        self.grad = None

    def zero_grad(self) -> None:
        self.grad = None

    def add_grad(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += grad


class Layer:
    params: tuple[Parameter, ...] = ()

    def forward(self, x, *, training=False, rng=None, cache=False):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


def _same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return out, before, total - before


class Conv2d(Layer):
    """3x3-style convolution with 'same' padding and arbitrary stride."""

    def __init__(self, in_channels, out_channels, kernel=3, stride=1, rng=None, name="conv"):
        rng = rng if rng is not None else np.random.default_rng(0)
        scale = math.sqrt(2.0 / (kernel * kernel * in_channels))
        weight = rng.normal(0.0, scale, size=(kernel, kernel, in_channels, out_channels))
        self.kernel = kernel
        self.stride = stride
        self.weight = Parameter(f"{name}.weight", weight)
        self.bias = Parameter(f"{name}.bias", np.zeros(out_channels))
        self.params = (self.weight, self.bias)
        self._cache = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        k, s = self.kernel, self.stride
        b, h, w, c = x.shape
        oh, pt, pb = _same_padding(h, k, s)
        ow, pl, pr = _same_padding(w, k, s)
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        windows = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::s, ::s]
        cols = np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3)).reshape(-1, k * k * c)
        wmat = self.weight.value.reshape(k * k * c, -1)
        out = cols @ wmat + self.bias.value
        out = out.reshape(b, oh, ow, -1)
        if cache:
            self._cache = (cols, x.shape, xp.shape, (pt, pl), (oh, ow))
        else:
            self._cache = None
        return out

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("Conv2d.backward called without a cached forward pass")
        cols, x_shape, xp_shape, (pt, pl), (oh, ow) = self._cache
        k, s = self.kernel, self.stride
        b, h, w, c = x_shape
        f = grad_out.shape[-1]
        dmat = grad_out.reshape(-1, f)
        wmat = self.weight.value.reshape(k * k * c, f)
        self.weight.add_grad((cols.T @ dmat).reshape(self.weight.value.shape))
        self.bias.add_grad(dmat.sum(axis=0))
        dcols = (dmat @ wmat.T).reshape(b, oh, ow, k, k, c)
        dxp = np.zeros((b, xp_shape[1], xp_shape[2], c))
        # One strided add per kernel tap; slices for a fixed tap are disjoint.
        for kh in range(k):
            for kw in range(k):
                dxp[:, kh : kh + oh * s : s, kw : kw + ow * s : s, :] += dcols[:, :, :, kh, kw, :]
        return dxp[:, pt : pt + h, pl : pl + w, :]


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        if cache:
            self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, grad_out):
        if self._mask is None:
            raise UsageError("ReLU.backward called without a cached forward pass")
        return grad_out * self._mask


class MaxPool2x2(Layer):
    """Non-overlapping 2x2 max pooling; ties route to the first element."""

    def __init__(self):
        self._cache = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        b, h, w, c = x.shape
        if h % 2 or w % 2:
            raise UsageError(f"MaxPool2x2 requires even spatial dims, got {(h, w)}")
        windows = x.reshape(b, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
        flat = windows.reshape(b, h // 2, w // 2, c, 4)
        idx = flat.argmax(axis=-1)
        if cache:
            self._cache = (idx, x.shape)
        return np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def backward(self, grad_out):
        if self._cache is None:
            raise UsageError("MaxPool2x2.backward called without a cached forward pass")
        idx, (b, h, w, c) = self._cache
        dflat = np.zeros((b, h // 2, w // 2, c, 4))
        np.put_along_axis(dflat, idx[..., None], grad_out[..., None], axis=-1)
        dw = dflat.reshape(b, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
        return dw.reshape(b, h, w, c)


class GlobalAveragePool(Layer):
    """(B, H, W, C) -> (B, C) channel means."""

    def __init__(self):
        self._shape = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        if cache:
            self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, grad_out):
        if self._shape is None:
            raise UsageError("GlobalAveragePool.backward called without a cached forward pass")
        b, h, w, c = self._shape
        return np.broadcast_to(grad_out[:, None, None, :], (b, h, w, c)) / (h * w)


class Dense(Layer):
    def __init__(self, in_features, out_features, rng=None, name="dense"):
        rng = rng if rng is not None else np.random.default_rng(0)
        scale = math.sqrt(2.0 / in_features)
        self.weight = Parameter(f"{name}.weight", rng.normal(0.0, scale, size=(in_features, out_features)))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_features))
        self.params = (self.weight, self.bias)
        self._x = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        if cache:
            self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, grad_out):
        if self._x is None:
            raise UsageError("Dense.backward called without a cached forward pass")
        self.weight.add_grad(self._x.T @ grad_out)
        self.bias.add_grad(grad_out.sum(axis=0))
        return grad_out @ self.weight.value.T


class Dropout(Layer):
    """Inverted dropout: identity in inference mode and at rate zero."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise UsageError(f"dropout rate must be in [0, 1), got {rate!r}")
        self.rate = rate
        self._mask = None

    def forward(self, x, *, training=False, rng=None, cache=False):
        if not training or self.rate == 0.0:
            if cache:
                self._mask = 1.0
            return x
        if rng is None:
            rng = np.random.default_rng(0)
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        if cache:
            self._mask = mask
        return x * mask

    def backward(self, grad_out):
        if self._mask is None:
            raise UsageError("Dropout.backward called without a cached forward pass")
        return grad_out * self._mask
