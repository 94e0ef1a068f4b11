"""Dataset discovery, deterministic stratified splitting, and split manifests.

Two on-disk layouts are supported:

* flat:      ``root/{class}/*.jpg|jpeg|png`` -- split by :func:`split_dataset`
* pre-split: ``root/{train,validation,test}/{class}/...`` -- used verbatim

Class names are always ordered lexicographically and that ordering defines
``label_index``.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

import numpy as np

from .exceptions import ConfigurationError, DatasetError
from .validation import check_fractions, check_seed

logger = logging.getLogger(__name__)

ALLOWED_EXTENSIONS = (".jpg", ".jpeg", ".png")

SPLIT_NAMES = ("train", "validation", "test")


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image on disk."""

    path: str
    label: str
    label_index: int


@dataclass
class DatasetIndex:
    """Every eligible image under a dataset root, grouped by class."""

    records: list[ImageRecord]
    class_names: list[str]
    counts: list[int]
    warnings: list[str] = field(default_factory=list)

    def records_for_class(self, name: str) -> list[ImageRecord]:
        return [r for r in self.records if r.label == name]


@dataclass
class SplitAssignment:
    """A disjoint train/validation/test partition of a record set."""

    train: list[ImageRecord]
    validation: list[ImageRecord]
    test: list[ImageRecord]
    seed: int | None = None
    fractions: tuple[float, float, float] | None = None

    def split(self, name: str) -> list[ImageRecord]:
        if name not in SPLIT_NAMES:
            raise ConfigurationError(f"unknown split {name!r}")
        return getattr(self, name)

    def all_records(self) -> list[ImageRecord]:
        return list(self.train) + list(self.validation) + list(self.test)

    def class_names(self) -> list[str]:
        return sorted({r.label for r in self.all_records()})


def _eligible(path: Path) -> bool:
    return path.suffix.lower() in ALLOWED_EXTENSIONS


def scan_dataset(root) -> DatasetIndex:
    """Discover one flat class-per-subdirectory dataset.

    Ineligible or unreadable files are skipped with a recorded warning; a
    class directory with no usable images is an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise ConfigurationError(f"dataset root {str(root)!r} does not exist or is not a directory")
    class_dirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not class_dirs:
        raise DatasetError(f"dataset root {str(root)!r} contains no class subdirectories")
    class_names = [d.name for d in class_dirs]
    records: list[ImageRecord] = []
    counts: list[int] = []
    warnings: list[str] = []
    for index, class_dir in enumerate(class_dirs):
        n_before = len(records)
        for entry in sorted(class_dir.iterdir(), key=lambda p: p.name):
            if entry.is_dir():
                continue
            if not _eligible(entry):
                warnings.append(f"skipped {entry}: extension not in {ALLOWED_EXTENSIONS}")
                continue
            if not (entry.is_file() and os.access(entry, os.R_OK)):
                warnings.append(f"skipped {entry}: not a readable file")
                continue
            records.append(ImageRecord(path=str(entry), label=class_dir.name, label_index=index))
        count = len(records) - n_before
        if count == 0:
            raise DatasetError(f"class directory {class_dir.name!r} contains no readable images")
        counts.append(count)
    for message in warnings:
        logger.warning(message)
    return DatasetIndex(records=records, class_names=class_names, counts=counts, warnings=warnings)


def _split_counts(n: int, fractions: tuple[float, float, float]) -> list[int]:
    # Floor counts per split, then hand leftovers to train -> validation -> test.
    base = [int(math.floor(n * f + 1e-9)) for f in fractions]
    leftover = n - sum(base)
    for i in range(leftover):
        base[i] += 1
    return base


def split_dataset(index: DatasetIndex, fractions, seed: int) -> SplitAssignment:
    """Stratified, seeded partition of a dataset index.

    Each class is shuffled and sliced independently with a per-class random
    stream derived from ``seed``, so the assignment is reproducible across
    processes and unaffected by other classes' sizes.
    """
    fractions = check_fractions(fractions)
    seed = check_seed(seed)
    parts: dict[str, list[ImageRecord]] = {name: [] for name in SPLIT_NAMES}
    for class_index, class_name in enumerate(index.class_names):
        class_records = index.records_for_class(class_name)
        rng = np.random.default_rng([seed, class_index])
        order = rng.permutation(len(class_records))
        shuffled = [class_records[i] for i in order]
        n_train, n_val, _ = _split_counts(len(shuffled), fractions)
        parts["train"].extend(shuffled[:n_train])
        parts["validation"].extend(shuffled[n_train : n_train + n_val])
        parts["test"].extend(shuffled[n_train + n_val :])
    return SplitAssignment(
        train=parts["train"],
        validation=parts["validation"],
        test=parts["test"],
        seed=seed,
        fractions=fractions,
    )


def scan_presplit(root) -> SplitAssignment:
    """Read a pre-split ``root/{train,validation,test}/{class}`` layout verbatim.

    ``train`` and ``test`` must exist; ``validation`` is optional. A single
    global class ordering (lexicographic over the union) defines label
    indices in every split.
    """
    root = Path(root)
    if not root.is_dir():
        raise ConfigurationError(f"dataset root {str(root)!r} does not exist or is not a directory")
    present = [name for name in SPLIT_NAMES if (root / name).is_dir()]
    for required in ("train", "test"):
        if required not in present:
            raise DatasetError(f"pre-split layout requires a {required!r} directory under {str(root)!r}")
    indexes = {name: scan_dataset(root / name) for name in present}
    class_names = sorted({name for idx in indexes.values() for name in idx.class_names})
    label_index = {name: i for i, name in enumerate(class_names)}
    parts: dict[str, list[ImageRecord]] = {name: [] for name in SPLIT_NAMES}
    for split_name, idx in indexes.items():
        parts[split_name] = [
            ImageRecord(path=r.path, label=r.label, label_index=label_index[r.label])
            for r in idx.records
        ]
    return SplitAssignment(train=parts["train"], validation=parts["validation"], test=parts["test"])


def manifest_entries(split: SplitAssignment, root) -> dict[str, dict[str, str]]:
    """Flatten a split into the manifest mapping: relative path -> split/label."""
    root = Path(root)
    entries: dict[str, dict[str, str]] = {}
    for split_name in SPLIT_NAMES:
        for record in split.split(split_name):
            rel = PurePosixPath(Path(record.path).relative_to(root).as_posix())
            entries[str(rel)] = {"split": split_name, "label": record.label}
    return entries


def save_split_manifest(split: SplitAssignment, root, path) -> None:
    """Write the JSON split manifest (bytes are deterministic for a fixed split)."""
    entries = manifest_entries(split, root)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_split_manifest(root, path) -> SplitAssignment:
    """Rebuild a SplitAssignment from a manifest file.

    Records within each split are ordered by relative path, which makes a
    manifest-driven run reproducible independent of how the manifest was
    produced.
    """
    root = Path(root)
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"split manifest {str(path)!r} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, dict) or not entries:
        raise ConfigurationError(f"split manifest {str(path)!r} is empty or malformed")
    class_names = sorted({info["label"] for info in entries.values()})
    label_index = {name: i for i, name in enumerate(class_names)}
    parts: dict[str, list[ImageRecord]] = {name: [] for name in SPLIT_NAMES}
    for rel in sorted(entries):
        info = entries[rel]
        split_name = info.get("split")
        label = info.get("label")
        if split_name not in SPLIT_NAMES or label not in label_index:
            raise ConfigurationError(f"split manifest entry {rel!r} is malformed: {info!r}")
        record = ImageRecord(path=str(root / rel), label=label, label_index=label_index[label])
        parts[split_name].append(record)
    return SplitAssignment(train=parts["train"], validation=parts["validation"], test=parts["test"])
