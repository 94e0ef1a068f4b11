"""Command-line entry points: split, train, evaluate, predict.

Exit codes: 0 success, 2 configuration/input error, 3 runtime training
failure. Every command resolves its config and persists it to
``output_dir/config.resolved.json`` before doing any work, and takes an
exclusive lock on the output directory while running.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .backbone import create_backbone
from .checkpoint import load_checkpoint
from .dataset import (
    ALLOWED_EXTENSIONS,
    SPLIT_NAMES,
    load_split_manifest,
    save_split_manifest,
    scan_dataset,
    scan_presplit,
    split_dataset,
)
from .evaluate import evaluate, write_predictions_csv, write_report_json
from .exceptions import (
    CheckpointError,
    ConfigurationError,
    DatasetError,
    EmberError,
    ImageLoadError,
    TrainingDivergedError,
    UsageError,
)
from .images import load_image
from .model import assemble
from .plots import PredictionGridSpec, plot_confusion, plot_roc, plot_training_curves, render_prediction_grid
from .training import train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3

LOCKFILE = ".ember.lock"

MANIFEST_NAME = "split_manifest.json"

METRICS_CSV_HEADER = ["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy", "stage"]


@contextlib.contextmanager
def output_lock(output_dir: Path):
    """Fail fast if another command is writing to the same output directory."""
    output_dir.mkdir(parents=True, exist_ok=True)
    lock = output_dir / LOCKFILE
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigurationError(
            f"output directory {str(output_dir)!r} is locked by another run "
            f"(delete {LOCKFILE} if that run is dead)"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(lock)


def _load_config(args) -> dict:
    if not args.config:
        raise ConfigurationError("--config is required for this command")
    config = config_mod.load_run_config(args.config)
    if args.output:
        config["output_dir"] = str(args.output)
    if args.seed is not None:
        config["data"]["seed"] = args.seed
        config["training"]["seed"] = args.seed
    if getattr(args, "threshold", None) is not None:
        config["evaluation"]["threshold"] = args.threshold
    return config


def _manifest_path(config: dict) -> Path:
    explicit = config["data"]["manifest"]
    if explicit:
        return Path(explicit)
    return Path(config["output_dir"]) / MANIFEST_NAME


def _load_splits(config: dict):
    root = config["data"]["root"]
    if config["data"]["layout"] == "presplit":
        return scan_presplit(root)
    manifest = _manifest_path(config)
    if not manifest.is_file():
        raise ConfigurationError(
            f"flat layout needs a split manifest; run `ember split` first "
            f"(expected {str(manifest)!r})"
        )
    return load_split_manifest(root, manifest)


def _build_model(config: dict, class_names: tuple[str, ...]):
    backbone = create_backbone(config["model"]["backbone"], seed=config["model"]["backbone_seed"])
    return assemble(
        backbone,
        config_mod.head_config(config),
        config_mod.adapter_policy(config),
        seed=config["model"]["seed"],
        class_names=class_names,
        positive_class=config["model"]["positive_class"],
        normalization=config["model"]["normalization"],
    )


def cmd_split(args) -> int:
    config = _load_config(args)
    output_dir = Path(config["output_dir"])
    with output_lock(output_dir):
        config_mod.write_resolved_config(config, output_dir)
        if config["data"]["layout"] != "flat":
            raise ConfigurationError("`ember split` applies to the flat layout only")
        index = scan_dataset(config["data"]["root"])
        split = split_dataset(index, tuple(config["data"]["fractions"]), config["data"]["seed"])
        manifest = _manifest_path(config)
        save_split_manifest(split, config["data"]["root"], manifest)
        print(f"wrote {manifest}")
        for split_name in SPLIT_NAMES:
            records = split.split(split_name)
            per_class = {name: 0 for name in index.class_names}
            for record in records:
                per_class[record.label] += 1
            counts = ", ".join(f"{name}={count}" for name, count in per_class.items())
            print(f"{split_name}: {len(records)} ({counts})")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    output_dir = Path(config["output_dir"])
    with output_lock(output_dir):
        config_mod.write_resolved_config(config, output_dir)
        splits = _load_splits(config)
        if not splits.validation:
            # The test stream doubles as validation when no validation
            # fraction was held out.
            splits.validation = list(splits.test)
        class_names = tuple(splits.class_names())
        model = _build_model(config, class_names)
        cfg = config_mod.training_config(config)
        augmentation = config_mod.augmentation_spec(config)
        metrics_path = output_dir / "metrics.csv"
        with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(METRICS_CSV_HEADER)

            def on_epoch(entry):
                writer.writerow(
                    [
                        entry.epoch,
                        f"{entry.train_loss:.6f}",
                        f"{entry.train_accuracy:.6f}",
                        f"{entry.val_loss:.6f}",
                        f"{entry.val_accuracy:.6f}",
                        entry.active_stage,
                    ]
                )
                fh.flush()
                print(
                    f"epoch {entry.epoch}: train_loss={entry.train_loss:.4f} "
                    f"train_acc={entry.train_accuracy:.4f} val_loss={entry.val_loss:.4f} "
                    f"val_acc={entry.val_accuracy:.4f} stage={entry.active_stage}"
                )

            model, history = train(
                model,
                splits,
                cfg,
                augmentation=augmentation,
                checkpoint_dir=output_dir / "checkpoints",
                on_epoch=on_epoch,
            )
        rows = [e.as_dict() for e in history.entries]
        plot_training_curves(rows, output_dir)
        print(
            f"finished {len(history.entries)} epoch(s); best epoch {history.best_epoch}"
            + (" (stopped early)" if history.stopped_early else "")
        )
        print(f"checkpoints under {output_dir / 'checkpoints'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    output_dir = Path(config["output_dir"])
    with output_lock(output_dir):
        config_mod.write_resolved_config(config, output_dir)
        checkpoint = args.checkpoint or (output_dir / "checkpoints" / "best")
        model, _ = load_checkpoint(checkpoint)
        splits = _load_splits(config)
        records = splits.test or splits.validation
        if not records:
            raise ConfigurationError("evaluation split is empty")
        report = evaluate(model, records, threshold=config["evaluation"]["threshold"])
        write_report_json(report, output_dir / "report.json")
        write_predictions_csv(report, output_dir / "predictions.csv")
        report_dict = report.to_dict()
        plot_confusion(report_dict, output_dir / "confusion.png")
        if report.roc is not None:
            plot_roc(report_dict, output_dir / "roc.png")
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        print(
            f"accuracy={report.accuracy:.4f} precision={report.precision:.4f} "
            f"recall={report.recall:.4f} f1={report.f1:.4f}"
            + (f" auc={report.auc:.4f}" if report.auc is not None else "")
        )
        print(f"report under {output_dir}")
    return EXIT_OK


def _gather_inputs(inputs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(
                sorted(
                    f for f in p.iterdir() if f.is_file() and f.suffix.lower() in ALLOWED_EXTENSIONS
                )
            )
        else:
            paths.append(p)
    return paths


def cmd_predict(args) -> int:
    if not args.checkpoint:
        raise ConfigurationError("--checkpoint is required for predict")
    config = _load_config(args) if args.config else None
    model, _ = load_checkpoint(args.checkpoint)
    if args.threshold is not None:
        threshold = args.threshold
    elif config is not None:
        threshold = config["evaluation"]["threshold"]
    else:
        threshold = 0.5
    paths = _gather_inputs(args.inputs)
    if not paths:
        raise ConfigurationError("no input images given")
    from .batches import Preprocessor

    preprocess = Preprocessor(model.adapter, model.normalization)
    names = model.class_names or (model.positive_class, f"not_{model.positive_class}")
    negative = next((n for n in names if n != model.positive_class), f"not_{model.positive_class}")
    raw_images, tensors, kept = [], [], []
    for path in paths:
        try:
            raw = load_image(path)
        except ImageLoadError as exc:
            print(f"error: {exc}", file=sys.stderr)
            continue
        raw_images.append(raw.values)
        tensors.append(preprocess(path).values)
        kept.append(path)
    if not kept:
        raise ConfigurationError("none of the inputs could be decoded")
    from .model import activate

    scores = []
    for start in range(0, len(tensors), 32):
        chunk = np.stack(tensors[start : start + 32])
        logits = model.forward_logits(chunk, training=False)
        scores.extend(float(s) for s in np.atleast_1d(activate(logits, model.head_cfg.mode)))
    labels = [model.positive_class if s >= threshold else negative for s in scores]
    for path, label, score in zip(kept, labels, scores):
        print(f"{path}\t{label}\t{score:.6f}")
    output = args.output or (config["output_dir"] if config else None)
    if output:
        output_dir = Path(output)
        with output_lock(output_dir):
            if config is not None:
                config_mod.write_resolved_config(config, output_dir)
            spec = PredictionGridSpec(columns=args.grid_columns)
            grid_path = render_prediction_grid(
                raw_images, labels, scores, spec, output_dir / "predictions_grid.png",
                positive_class=model.positive_class,
            )
            print(f"wrote {grid_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ember",
        description="Transfer-learning pipeline for fire / no-fire image classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, needs_inputs in (
        ("split", cmd_split, False),
        ("train", cmd_train, False),
        ("evaluate", cmd_evaluate, False),
        ("predict", cmd_predict, True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--checkpoint", help="checkpoint directory")
        p.add_argument("--output", help="output directory (overrides config output_dir)")
        p.add_argument("--threshold", type=float, help="decision threshold")
        p.add_argument("--seed", type=int, help="override data and training seeds")
        if needs_inputs:
            p.add_argument("inputs", nargs="+", help="image files or directories")
            p.add_argument("--grid-columns", type=int, default=4, help="columns in the prediction grid")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (ConfigurationError, DatasetError, UsageError, CheckpointError, ImageLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmberError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
