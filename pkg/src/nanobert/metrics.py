"""Evaluation metrics: per-class and weighted P/R/F1, accuracy, RMSE, Pearson r.

Zero denominators follow the convention metric = 0, recorded by a flag on
the report rather than silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    per_class: dict[int, ClassMetrics]
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_division: bool


def classification_report(y_true, y_pred) -> ClassificationReport:
    """Confusion-matrix metrics over all class ids seen in either vector.

    Weighted averages use true-class support as weights, so weighted recall
    always equals accuracy.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(f"expected matching 1-D vectors, got {y_true.shape} and {y_pred.shape}")
    n = y_true.shape[0]
    if n == 0:
        raise ValueError("cannot score zero predictions")
    if y_true.min() < 0 or y_pred.min() < 0:
        raise ValueError("class ids must be non-negative")

    classes = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    zero_hit = False
    per_class: dict[int, ClassMetrics] = {}
    w_p = w_r = w_f = 0.0
    for c in classes:
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        fp = int(np.sum((y_true != c) & (y_pred == c)))
        fn = int(np.sum((y_true == c) & (y_pred != c)))
        support = tp + fn
        if tp + fp == 0:
            precision, zero_hit = 0.0, True
        else:
            precision = tp / (tp + fp)
        if support == 0:
            recall, zero_hit = 0.0, True
        else:
            recall = tp / support
        if precision + recall == 0.0:
            f1, zero_hit = 0.0, True
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        per_class[c] = ClassMetrics(precision, recall, f1, support)
        w_p += support * precision
        w_r += support * recall
        w_f += support * f1

    accuracy = float(np.mean(y_true == y_pred))
    return ClassificationReport(
        per_class=per_class,
        accuracy=accuracy,
        weighted_precision=w_p / n,
        weighted_recall=w_r / n,
        weighted_f1=w_f / n,
        zero_division=zero_hit,
    )


def report_to_json_dict(report: ClassificationReport,
                        label_names: list[str] | None = None) -> dict:
    """Nested dict mirroring the usual text-classification report layout.

    Weighted averages live under "weighted avg" with keys "precision",
    "recall" and "f1-score"; per-class blocks are keyed by label name when
    names are given, else by the stringified id.
    """
    doc: dict = {}
    for c, m in sorted(report.per_class.items()):
        key = label_names[c] if label_names and c < len(label_names) else str(c)
        doc[key] = {
            "precision": m.precision,
            "recall": m.recall,
            "f1-score": m.f1,
            "support": m.support,
        }
    doc["accuracy"] = report.accuracy
    doc["weighted avg"] = {
        "precision": report.weighted_precision,
        "recall": report.weighted_recall,
        "f1-score": report.weighted_f1,
        "support": sum(m.support for m in report.per_class.values()),
    }
    if report.zero_division:
        doc["zero_division"] = True
    return doc


def rmse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("rmse over zero elements")
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def pearson_r(x, y) -> float:
    """Sample Pearson correlation; undefined for constant vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"expected matching 1-D vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("pearson_r needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sum(dx * dx))
    sy = float(np.sum(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("pearson_r is undefined when either vector has zero variance")
    return float(np.sum(dx * dy) / math.sqrt(sx * sy))
