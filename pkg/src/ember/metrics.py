"""Binary-classifier metrics, written out exactly: confusion matrix, derived
rates, ROC construction, and trapezoidal AUC.

Conventions, pinned for testability: a sample is predicted positive iff its
score is >= the threshold; ROC thresholds are the distinct scores in
descending order plus a sentinel above the maximum, with tied scores moving
together; zero-denominator rates are 0; AUC half-credits tied
positive/negative pairs (Mann-Whitney).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EvaluationError
from .validation import check_scores_labels


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]

    def fpr(self) -> list[float]:
        return [p[0] for p in self.points]

    def tpr(self) -> list[float]:
        return [p[1] for p in self.points]


def confusion_matrix(labels, scores, threshold: float = 0.5) -> ConfusionMatrix:
    """Count tp/fp/tn/fn at a decision threshold (positive iff score >= threshold)."""
    scores, labels = check_scores_labels(scores, labels)
    predicted = scores >= threshold
    actual = labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )


def derived_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1); zero-denominator cases return 0."""
    if cm.total < 1:
        raise EvaluationError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return accuracy, precision, recall, f1


def roc_curve(labels, scores) -> RocCurve:
    """ROC points from (0,0) to (1,1) over the distinct descending thresholds."""
    scores, labels = check_scores_labels(scores, labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0:
        raise EvaluationError("ROC requires at least one positive sample; none present")
    if n_neg == 0:
        raise EvaluationError("ROC requires at least one negative sample; none present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    points = [(0.0, 0.0)]
    thresholds = [math.inf]
    tp = fp = 0
    i = 0
    n = len(sorted_scores)
    while i < n:
        value = sorted_scores[i]
        # Samples with equal scores cross the threshold together.
        while i < n and sorted_scores[i] == value:
            if sorted_labels[i] == 1:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(float(value))
    return RocCurve(points=tuple(points), thresholds=tuple(thresholds))


def auc(roc: RocCurve) -> float:
    """Trapezoidal area under the ROC points."""
    area = 0.0
    for (x1, y1), (x2, y2) in zip(roc.points, roc.points[1:]):
        area += (x2 - x1) * (y1 + y2) / 2.0
    return area
