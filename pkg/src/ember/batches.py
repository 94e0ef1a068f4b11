"""Deterministic batching of image records, with optional augmentation.

Batch order is a pure function of (seed, epoch); per-record augmentation
streams are derived from the record's position in the epoch order, so a
parallel loader (``EMBER_NUM_WORKERS``) emits exactly the single-worker
result.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .augment import AugmentationSpec, augment
from .dataset import ImageRecord
from .exceptions import ConfigurationError
from .images import ImageTensor, InputAdapterPolicy, adapt_input, load_image, normalize
from .validation import check_batch_size, check_seed

WORKERS_ENV_VAR = "EMBER_NUM_WORKERS"


@dataclass
class Batch:
    """A stacked slice of one epoch: images, label indices, and their records."""

    images: np.ndarray
    labels: np.ndarray
    record_refs: list[ImageRecord]
    normalization: str

    def __len__(self) -> int:
        return len(self.record_refs)


class Preprocessor:
    """Load -> adapt -> normalize pipeline producing model-ready tensors."""

    def __init__(self, adapter: InputAdapterPolicy, normalization: str, loader=load_image):
        self.adapter = adapter
        self.normalization = normalization
        self.loader = loader

    def __call__(self, record) -> ImageTensor:
        tensor = self.loader(record)
        tensor = adapt_input(tensor, self.adapter)
        return normalize(tensor, self.normalization)


def _num_workers(explicit: int | None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    raw = os.environ.get(WORKERS_ENV_VAR, "")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}")


def make_batches(
    records: list[ImageRecord],
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
    spec: AugmentationSpec | None = None,
    *,
    epoch: int = 0,
    preprocess: Preprocessor | None = None,
    num_workers: int | None = None,
) -> list[Batch]:
    """Cut one epoch of records into ordered batches.

    Every record appears exactly once. Augmentation is applied only when a
    spec is provided (the training stream); validation and test streams pass
    ``spec=None``.
    """
    batch_size = check_batch_size(batch_size)
    seed = check_seed(seed)
    if not records:
        raise ConfigurationError("cannot batch an empty record list")
    if preprocess is None:
        preprocess = Preprocessor(InputAdapterPolicy("resize", (224, 224)), "unit_0_1")

    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(len(records))
    else:
        order = np.arange(len(records))
    ordered = [records[i] for i in order]

    def prepare(position: int) -> np.ndarray:
        tensor = preprocess(ordered[position])
        if spec is not None:
            draw = np.random.default_rng([spec.seed, seed, epoch, position])
            tensor = augment(tensor, spec, draw)
        return tensor.values

    workers = _num_workers(num_workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            prepared = list(pool.map(prepare, range(len(ordered))))
    else:
        prepared = [prepare(i) for i in range(len(ordered))]

    batches = []
    for start in range(0, len(ordered), batch_size):
        chunk = slice(start, start + batch_size)
        refs = ordered[chunk]
        batches.append(
            Batch(
                images=np.stack(prepared[chunk]),
                labels=np.array([r.label_index for r in refs], dtype=int),
                record_refs=refs,
                normalization=preprocess.normalization,
            )
        )
    return batches
