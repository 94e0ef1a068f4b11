"""Input validation helpers shared across the pipeline and the estimator API.

All helpers either return a canonicalized value or raise one of the package
exceptions; they never mutate their inputs.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError, UsageError

FRACTION_TOLERANCE = 1e-9


def check_fractions(fractions) -> tuple[float, float, float]:
    """Validate (train, validation, test) fractions: non-negative, sum to 1."""
    try:
        values = tuple(float(f) for f in fractions)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"fractions must be three numbers, got {fractions!r}") from exc
    if len(values) != 3:
        raise ConfigurationError(f"expected three fractions (train, validation, test), got {len(values)}")
    if any(f < 0 for f in values):
        raise ConfigurationError(f"fractions must be non-negative, got {values}")
    if abs(sum(values) - 1.0) > FRACTION_TOLERANCE:
        raise ConfigurationError(f"fractions must sum to 1 within {FRACTION_TOLERANCE}, got sum {sum(values)!r}")
    return values


def check_batch_size(batch_size: int) -> int:
    if not isinstance(batch_size, (int, np.integer)) or isinstance(batch_size, bool):
        raise ConfigurationError(f"batch_size must be an integer, got {batch_size!r}")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    return int(batch_size)


def check_scores(scores) -> np.ndarray:
    """Canonicalize classifier scores to a finite 1-D float array."""
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise UsageError(f"scores must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise UsageError("scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise UsageError("scores must be finite")
    return arr


def check_binary_labels(labels) -> np.ndarray:
    """Canonicalize labels to a 1-D array of {0, 1} ints."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise UsageError(f"labels must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise UsageError("labels must be non-empty")
    as_int = arr.astype(int)
    if not np.array_equal(as_int, arr.astype(float)) or not np.all(np.isin(as_int, (0, 1))):
        raise UsageError("labels must contain only 0 and 1")
    return as_int


def check_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = check_scores(scores)
    y = check_binary_labels(labels)
    if s.shape != y.shape:
        raise UsageError(f"scores and labels must have equal length, got {s.size} and {y.size}")
    return s, y


def check_probabilities(probs) -> np.ndarray:
    arr = check_scores(probs)
    if np.any(arr < 0) or np.any(arr > 1):
        raise UsageError("probabilities must lie in [0, 1]")
    return arr


def check_image_batch(X) -> np.ndarray:
    """Validate a stacked image batch of shape (N, H, W, 3) with raw intensities.

    Accepts integer or float arrays; values must lie in [0, 255].
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 4 or arr.shape[-1] != 3:
        raise UsageError(f"expected an array of shape (N, H, W, 3), got {arr.shape}")
    if arr.shape[0] == 0:
        raise UsageError("image batch must contain at least one image")
    if not np.all(np.isfinite(arr)):
        raise UsageError("image batch must be finite")
    if arr.min() < 0 or arr.max() > 255:
        raise UsageError("image batch must hold raw intensities in [0, 255]")
    return arr


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigurationError(f"seed must be an integer, got {seed!r}")
    return int(seed)
