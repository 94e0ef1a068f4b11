"""Run configuration: strict JSON loading, default resolution, persistence.

A run config has four sections (``data``, ``model``, ``training``,
``evaluation``) plus ``output_dir``. Unknown keys anywhere are rejected --
silent typos in training configs are a reproducibility hazard. Every command
writes its fully resolved config to ``output_dir/config.resolved.json``
before doing any work.
"""
from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

from .augment import AugmentationSpec
from .exceptions import ConfigurationError
from .images import InputAdapterPolicy
from .model import HeadConfig
from .training import EarlyStoppingConfig, OptimizerConfig, TrainingConfig
from .validation import check_fractions

RESOLVED_CONFIG_NAME = "config.resolved.json"

_REQUIRED = object()

DEFAULTS: dict = {
    "data": {
        "root": _REQUIRED,
        "layout": "flat",
        "fractions": [0.7, 0.1, 0.2],
        "seed": 42,
        "manifest": None,
        "augmentation": {
            "rotation_max_degrees": 15.0,
            "zoom_range": 0.1,
            "horizontal_flip": True,
            "brightness_jitter": 0.0,
            "gaussian_noise_stddev": 0.0,
            "seed": 0,
        },
    },
    "model": {
        "backbone": "toy",
        "backbone_seed": 0,
        "head": {
            "mode": "binary_sigmoid",
            "hidden_units": 128,
            "dropout_rate": 0.2,
            "num_classes": 2,
        },
        "adapter": {"policy": "resize", "target": [224, 224]},
        "normalization": None,
        "seed": 0,
        "positive_class": None,
    },
    "training": {
        "epochs": 200,
        "batch_size": 32,
        "learning_rate": 1e-5,
        "optimizer": {"name": "adam", "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
        "early_stopping": {
            "enabled": False,
            "monitor": "val_loss",
            "patience": 10,
            "min_delta": 0.0,
        },
        "unfreeze_schedule": [[0, "head_only"]],
        "seed": 42,
    },
    "evaluation": {"threshold": 0.5},
    "output_dir": _REQUIRED,
}


def _merge(defaults, supplied, path: str) -> dict:
    if not isinstance(supplied, dict):
        raise ConfigurationError(f"config section {path or '<root>'} must be an object, got {type(supplied).__name__}")
    unknown = sorted(set(supplied) - set(defaults))
    if unknown:
        where = path or "top level"
        raise ConfigurationError(f"unknown config key(s) {unknown} at {where}")
    resolved = {}
    for key, default in defaults.items():
        dotted = f"{path}.{key}" if path else key
        if isinstance(default, dict):
            resolved[key] = _merge(default, supplied.get(key, {}), dotted)
        elif key in supplied:
            resolved[key] = copy.deepcopy(supplied[key])
        elif default is _REQUIRED:
            raise ConfigurationError(f"missing required config key {dotted!r}")
        else:
            resolved[key] = copy.deepcopy(default)
    return resolved


def resolve_config(raw: dict) -> dict:
    """Merge a raw config dict over the defaults, rejecting unknown keys."""
    resolved = _merge(DEFAULTS, raw, "")
    check_fractions(resolved["data"]["fractions"])
    if resolved["data"]["layout"] not in ("flat", "presplit"):
        raise ConfigurationError(
            f"data.layout must be 'flat' or 'presplit', got {resolved['data']['layout']!r}"
        )
    # Construct the typed configs once so invalid values fail at resolve time.
    augmentation_spec(resolved)
    adapter_policy(resolved)
    head_config(resolved)
    training_config(resolved)
    threshold = resolved["evaluation"]["threshold"]
    if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
        raise ConfigurationError(f"evaluation.threshold must be a number, got {threshold!r}")
    return resolved


def load_run_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {str(path)!r} does not exist")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {str(path)!r} is not valid JSON: {exc}") from exc
    return resolve_config(raw)


def write_resolved_config(config: dict, output_dir) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    target = output_dir / RESOLVED_CONFIG_NAME
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return target


def packaged_config(name: str) -> dict:
    """Load one of the configs shipped inside the package (e.g. 'uttarakhand')."""
    resource = resources.files("ember").joinpath("configs", f"{name}.json")
    try:
        text = resource.read_text("utf-8")
    except FileNotFoundError as exc:
        raise ConfigurationError(f"no packaged config named {name!r}") from exc
    return resolve_config(json.loads(text))


# -- converters from resolved config sections to domain objects ------------


def augmentation_spec(config: dict) -> AugmentationSpec:
    section = config["data"]["augmentation"]
    return AugmentationSpec(
        rotation_max_degrees=float(section["rotation_max_degrees"]),
        zoom_range=float(section["zoom_range"]),
        horizontal_flip=bool(section["horizontal_flip"]),
        brightness_jitter=float(section["brightness_jitter"]),
        gaussian_noise_stddev=float(section["gaussian_noise_stddev"]),
        seed=int(section["seed"]),
    )


def adapter_policy(config: dict) -> InputAdapterPolicy:
    section = config["model"]["adapter"]
    return InputAdapterPolicy(policy=section["policy"], target=tuple(section["target"]))


def head_config(config: dict) -> HeadConfig:
    section = config["model"]["head"]
    return HeadConfig(
        mode=section["mode"],
        hidden_units=int(section["hidden_units"]),
        dropout_rate=float(section["dropout_rate"]),
        num_classes=int(section["num_classes"]),
    )


def training_config(config: dict) -> TrainingConfig:
    section = config["training"]
    optimizer = OptimizerConfig(
        name=section["optimizer"]["name"],
        beta1=float(section["optimizer"]["beta1"]),
        beta2=float(section["optimizer"]["beta2"]),
        epsilon=float(section["optimizer"]["epsilon"]),
    )
    es = section["early_stopping"]
    early_stopping = EarlyStoppingConfig(
        enabled=bool(es["enabled"]),
        monitor=es["monitor"],
        patience=int(es["patience"]),
        min_delta=float(es["min_delta"]),
    )
    schedule = tuple((int(e), str(s)) for e, s in section["unfreeze_schedule"])
    return TrainingConfig(
        epochs=int(section["epochs"]),
        batch_size=int(section["batch_size"]),
        learning_rate=float(section["learning_rate"]),
        optimizer=optimizer,
        early_stopping=early_stopping,
        unfreeze_schedule=schedule,
        seed=int(section["seed"]),
    )
