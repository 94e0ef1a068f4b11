"""Model evaluation over a record set, and the report/prediction artifacts."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .batches import Preprocessor
from .dataset import ImageRecord
from .exceptions import ImageLoadError, UsageError
from .metrics import ConfusionMatrix, RocCurve, auc, confusion_matrix, derived_metrics, roc_curve
from .model import ClassifierModel


@dataclass
class PerImageResult:
    path: str
    score: float
    predicted_label: str
    true_label: str


@dataclass
class EvaluationReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    roc: RocCurve | None
    threshold: float
    per_image: list[PerImageResult]
    class_names: list[str]
    positive_class: str
    error_rows: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.as_dict(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "roc": [[fpr, tpr] for fpr, tpr in self.roc.points] if self.roc else None,
            "threshold": self.threshold,
            "class_names": self.class_names,
            "positive_class": self.positive_class,
            "error_row_count": len(self.error_rows),
            "warnings": self.warnings,
            "num_evaluated": len(self.per_image),
        }


def evaluate(
    model: ClassifierModel,
    records: list[ImageRecord],
    threshold: float = 0.5,
    *,
    batch_size: int = 32,
) -> EvaluationReport:
    """Score every record and assemble the full evaluation report.

    Unreadable images become error rows: excluded from the metrics, counted
    in the report. ROC/AUC are omitted (with a warning) when the evaluated
    records contain only one class.
    """
    if model.head_cfg.mode != "binary_sigmoid":
        raise UsageError("evaluate supports binary sigmoid models")
    if not records:
        raise UsageError("evaluate requires a non-empty record list")
    preprocess = Preprocessor(model.adapter, model.normalization)
    positive = model.positive_class
    names = list(model.class_names) if model.class_names else sorted({r.label for r in records})
    negative_candidates = [n for n in names if n != positive]
    negative = negative_candidates[0] if negative_candidates else f"not_{positive}"

    usable: list[tuple[ImageRecord, np.ndarray]] = []
    error_rows: list[tuple[str, str]] = []
    for record in records:
        try:
            usable.append((record, preprocess(record).values))
        except ImageLoadError as exc:
            error_rows.append((record.path, str(exc)))
    warnings = []
    if not usable:
        raise UsageError("no evaluable images: every record failed to decode")

    scores = np.empty(len(usable))
    for start in range(0, len(usable), batch_size):
        chunk = usable[start : start + batch_size]
        images = np.stack([values for _, values in chunk])
        logits = model.forward_logits(images, training=False)
        from .model import activate

        scores[start : start + len(chunk)] = activate(logits, model.head_cfg.mode)

    labels = np.array([1 if record.label == positive else 0 for record, _ in usable])
    per_image = [
        PerImageResult(
            path=record.path,
            score=float(score),
            predicted_label=positive if score >= threshold else negative,
            true_label=record.label,
        )
        for (record, _), score in zip(usable, scores)
    ]
    cm = confusion_matrix(labels, scores, threshold)
    accuracy, precision, recall, f1 = derived_metrics(cm)
    roc = None
    roc_auc = None
    if labels.min() == labels.max():
        present = positive if labels[0] == 1 else negative
        warnings.append(
            f"ROC/AUC omitted: evaluated records contain only class {present!r}"
        )
    else:
        roc = roc_curve(labels, scores)
        roc_auc = auc(roc)
    return EvaluationReport(
        confusion=cm,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=roc_auc,
        roc=roc,
        threshold=threshold,
        per_image=per_image,
        class_names=names,
        positive_class=positive,
        error_rows=error_rows,
        warnings=warnings,
    )


def write_report_json(report: EvaluationReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def write_predictions_csv(report: EvaluationReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "true_label", "score", "predicted_label"])
        for row in report.per_image:
            writer.writerow([row.path, row.true_label, f"{row.score:.6f}", row.predicted_label])
