"""Loss functions and their analytic gradients."""
from __future__ import annotations

import numpy as np

from .exceptions import UsageError
from .validation import check_binary_labels, check_probabilities

EPSILON = 1e-7


def _clamped(probs, labels):
    p = check_probabilities(probs)
    y = check_binary_labels(labels)
    if p.shape != y.shape:
        raise UsageError(f"probs and labels must have equal length, got {p.size} and {y.size}")
    return np.clip(p, EPSILON, 1.0 - EPSILON), y


def binary_cross_entropy(probs, labels) -> float:
    """Mean of -[y ln p + (1 - y) ln(1 - p)], with p clamped to [1e-7, 1 - 1e-7]."""
    p, y = _clamped(probs, labels)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def binary_cross_entropy_gradient(probs, labels) -> np.ndarray:
    """d(mean BCE)/dp = (p - y) / (p (1 - p)) / N on the clamped probabilities."""
    p, y = _clamped(probs, labels)
    return (p - y) / (p * (1 - p)) / p.size


def categorical_cross_entropy(probs: np.ndarray, label_indices: np.ndarray) -> float:
    """Mean of -ln p[true class] for row-stochastic probability matrices."""
    p = np.asarray(probs, dtype=float)
    y = np.asarray(label_indices, dtype=int)
    if p.ndim != 2 or y.ndim != 1 or p.shape[0] != y.shape[0]:
        raise UsageError(f"expected (N, K) probs and length-N labels, got {p.shape} and {y.shape}")
    picked = np.clip(p[np.arange(len(y)), y], EPSILON, 1.0)
    return float(-np.mean(np.log(picked)))
