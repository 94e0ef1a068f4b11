"""Checkpoints: a weight blob plus a JSON sidecar describing the model.

Layout of a checkpoint directory::

    weights.npz   every parameter, keyed "group/layer.param"
    model.json    backbone name, head config, adapter, normalization,
                  class names, trainability stage, format version
    history.json  optional training history

Weights round-trip bit-for-bit (float64 in, float64 out). Files are written
via temp-then-rename so a crashed save never leaves a half-written file.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .backbone import create_backbone
from .exceptions import CheckpointError
from .images import InputAdapterPolicy
from .model import ClassifierModel, HeadConfig, UnfreezeStage, assemble
from .training import TrainingHistory

FORMAT_VERSION = 1

WEIGHTS_FILE = "weights.npz"
SIDECAR_FILE = "model.json"
HISTORY_FILE = "history.json"


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(model: ClassifierModel, history: TrainingHistory | None, path) -> None:
    """Write a complete checkpoint directory for the model."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    import io

    buffer = io.BytesIO()
    np.savez(buffer, **{name: p.value for name, p in model.all_parameters()})
    _atomic_write_bytes(path / WEIGHTS_FILE, buffer.getvalue())

    sidecar = {
        "format_version": FORMAT_VERSION,
        "backbone": {
            "name": model.backbone.name,
            "expected_input": list(model.backbone.expected_input),
            "feature_shape": list(model.backbone.feature_shape),
            "parameter_groups": list(model.backbone.parameter_groups),
        },
        "head": asdict(model.head_cfg),
        "adapter": {"policy": model.adapter.policy, "target": list(model.adapter.target)},
        "normalization": model.normalization,
        "class_names": list(model.class_names),
        "positive_class": model.positive_class,
        "stage": {
            "name": model.stage_name,
            "trainable_groups": [
                g for g in model.backbone.parameter_groups if model.trainability[g]
            ],
        },
    }
    _atomic_write_bytes(
        path / SIDECAR_FILE, (json.dumps(sidecar, indent=2, sort_keys=True) + "\n").encode()
    )
    if history is not None:
        _atomic_write_bytes(
            path / HISTORY_FILE,
            (json.dumps(history.to_dict(), indent=2) + "\n").encode(),
        )


def load_checkpoint(path) -> tuple[ClassifierModel, TrainingHistory | None]:
    """Rebuild a model (and history, if present) from a checkpoint directory."""
    path = Path(path)
    sidecar_path = path / SIDECAR_FILE
    weights_path = path / WEIGHTS_FILE
    if not sidecar_path.is_file():
        raise CheckpointError(f"checkpoint {str(path)!r} is missing {SIDECAR_FILE}")
    if not weights_path.is_file():
        raise CheckpointError(f"checkpoint {str(path)!r} is missing {WEIGHTS_FILE}")
    try:
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint sidecar: {exc}") from exc

    version = sidecar.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version!r} does not match supported {FORMAT_VERSION}"
        )
    backbone_info = sidecar.get("backbone", {})
    backbone = create_backbone(backbone_info.get("name", ""), for_checkpoint=True)
    head_cfg = HeadConfig(**sidecar["head"])
    adapter_info = sidecar["adapter"]
    adapter = InputAdapterPolicy(policy=adapter_info["policy"], target=tuple(adapter_info["target"]))
    model = assemble(
        backbone,
        head_cfg,
        adapter,
        class_names=tuple(sidecar.get("class_names", ())) or None,
        positive_class=sidecar.get("positive_class"),
        normalization=sidecar.get("normalization"),
    )
    with np.load(weights_path) as blob:
        stored = set(blob.files)
        expected = {name for name, _ in model.all_parameters()}
        if stored != expected:
            missing = sorted(expected - stored)
            extra = sorted(stored - expected)
            raise CheckpointError(
                f"checkpoint weights do not match the model (missing {missing}, extra {extra})"
            )
        for name, p in model.all_parameters():
            value = blob[name]
            if value.shape != p.value.shape:
                raise CheckpointError(
                    f"weight {name!r} has shape {value.shape}, expected {p.value.shape}"
                )
            p.value = value.astype(float)
    stage_info = sidecar.get("stage", {})
    stage = UnfreezeStage(
        name=stage_info.get("name", "head_only"),
        trainable_groups=tuple(stage_info.get("trainable_groups", ())),
    )
    model.set_trainability(stage)
    history = None
    history_path = path / HISTORY_FILE
    if history_path.is_file():
        with open(history_path, "r", encoding="utf-8") as fh:
            history = TrainingHistory.from_dict(json.load(fh))
    return model, history
