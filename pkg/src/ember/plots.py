"""Rendering of the run artifacts: training curves, ROC plot, confusion-matrix
heatmap, and labeled prediction grids.

Plots draw only from already-persisted data (history rows or report dicts),
so re-rendering is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .exceptions import ConfigurationError

DPI = 100

FIRE_BANNER = "#c62828"
NOFIRE_BANNER = "#2e7d32"


@dataclass(frozen=True)
class PredictionGridSpec:
    columns: int = 4
    rows: int | None = None
    cell_label: bool = True
    highlight_errors: bool = True

    def __post_init__(self):
        if self.columns < 1:
            raise ConfigurationError(f"grid columns must be >= 1, got {self.columns}")
        if self.rows is not None and self.rows < 1:
            raise ConfigurationError(f"grid rows must be >= 1, got {self.rows}")

    def layout(self, n_images: int) -> tuple[int, int]:
        rows = self.rows if self.rows is not None else math.ceil(n_images / self.columns)
        if rows * self.columns < n_images:
            raise ConfigurationError(
                f"grid {rows}x{self.columns} cannot hold {n_images} images"
            )
        return rows, self.columns


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_training_curves(rows: list[dict], out_dir) -> tuple[Path, Path]:
    """Write curves_accuracy.png and curves_loss.png from epoch metric rows."""
    out_dir = Path(out_dir)
    epochs = [r["epoch"] for r in rows]
    specs = (
        ("accuracy", "train_accuracy", "val_accuracy", "Accuracy"),
        ("loss", "train_loss", "val_loss", "Loss"),
    )
    paths = []
    for stem, train_key, val_key, label in specs:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(epochs, [r[train_key] for r in rows], label=f"training {stem}")
        ax.plot(epochs, [r[val_key] for r in rows], label=f"validation {stem}")
        ax.set_xlabel("epoch")
        ax.set_ylabel(label.lower())
        ax.set_title(f"Training and validation {stem}")
        ax.legend()
        fig.tight_layout()
        paths.append(_save(fig, out_dir / f"curves_{stem}.png"))
    return paths[0], paths[1]


def plot_roc(report: dict, path) -> Path:
    points = report.get("roc") or []
    fig, ax = plt.subplots(figsize=(5, 5))
    if points:
        fpr = [p[0] for p in points]
        tpr = [p[1] for p in points]
        auc_value = report.get("auc")
        label = f"AUC = {auc_value:.4f}" if auc_value is not None else "ROC"
        ax.plot(fpr, tpr, marker=".", label=label)
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", label="chance")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("Receiver operating characteristic")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _save(fig, path)


def plot_confusion(report: dict, path) -> Path:
    cm = report["confusion"]
    positive = report.get("positive_class", "fire")
    names = report.get("class_names") or [positive, f"not {positive}"]
    negative = next((n for n in names if n != positive), f"not {positive}")
    grid = np.array([[cm["tp"], cm["fn"]], [cm["fp"], cm["tn"]]], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    image = ax.imshow(grid, cmap="Blues")
    for (i, j), value in np.ndenumerate(grid):
        color = "white" if value > grid.max() / 2 else "black"
        ax.text(j, i, f"{int(value)}", ha="center", va="center", color=color)
    ax.set_xticks([0, 1], [positive, negative])
    ax.set_yticks([0, 1], [positive, negative])
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    ax.set_title("Confusion matrix")
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    return _save(fig, path)


def render_prediction_grid(
    images: list[np.ndarray],
    labels: list[str],
    scores: list[float],
    spec: PredictionGridSpec,
    path,
    positive_class: str = "fire",
    true_labels: list[str] | None = None,
) -> Path:
    """Tile raw-intensity images with a colored label banner per cell.

    Banner is red for the positive ("fire") class and green otherwise; when
    true labels are supplied and highlighting is on, wrong cells get a red
    border.
    """
    if not images:
        raise ConfigurationError("prediction grid requires at least one image")
    rows, cols = spec.layout(len(images))
    fig, axes = plt.subplots(rows, cols, figsize=(cols * 2.4, rows * 2.6), squeeze=False)
    for index in range(rows * cols):
        ax = axes[index // cols][index % cols]
        ax.set_xticks([])
        ax.set_yticks([])
        if index >= len(images):
            ax.axis("off")
            continue
        ax.imshow(np.clip(images[index], 0, 255).astype(np.uint8))
        if spec.cell_label:
            banner = FIRE_BANNER if labels[index] == positive_class else NOFIRE_BANNER
            ax.set_title(
                f"{labels[index]} ({scores[index]:.2f})",
                fontsize=8,
                color="white",
                backgroundcolor=banner,
            )
        if spec.highlight_errors and true_labels is not None and labels[index] != true_labels[index]:
            for spine in ax.spines.values():
                spine.set_edgecolor(FIRE_BANNER)
                spine.set_linewidth(3)
    fig.tight_layout()
    return _save(fig, path)
