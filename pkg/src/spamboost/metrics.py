"""Binary classification metrics: confusion counts, scalar scores, ROC/PR.

Undefined ratios (zero denominators) are reported as None rather than being
silently coerced to 0, so downstream comparisons cannot be corrupted by
degenerate inputs. All values stay at full precision; rounding for display
lives in the report layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "ConfusionMatrix",
    "MetricsReport",
    "CurvePoints",
    "confusion",
    "scalar_metrics",
    "roc_curve",
    "pr_curve",
    "rank_auc",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "tn", "fp", "fn"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    """Scalar metrics (None where undefined) plus optional curve areas."""

    confusion: ConfusionMatrix
    accuracy: Optional[float]
    specificity: Optional[float]
    sensitivity: Optional[float]
    precision: Optional[float]
    f1: Optional[float]
    balanced_accuracy: Optional[float]
    roc_auc: Optional[float] = None
    pr_auc: Optional[float] = None


@dataclass(frozen=True)
class CurvePoints:
    """Curve as parallel arrays; one point per decision threshold."""

    xs: np.ndarray
    ys: np.ndarray
    thresholds: np.ndarray

    def __len__(self) -> int:
        return len(self.xs)


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D sequence")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(actual, predicted) -> ConfusionMatrix:
    """Count TP/TN/FP/FN with spam (1) as the positive class."""
    a = _as_binary(actual, "actual")
    p = _as_binary(predicted, "predicted")
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    return ConfusionMatrix(
        tp=int(((a == 1) & (p == 1)).sum()),
        tn=int(((a == 0) & (p == 0)).sum()),
        fp=int(((a == 0) & (p == 1)).sum()),
        fn=int(((a == 1) & (p == 0)).sum()),
    )


def _ratio(num: int, denom: int) -> Optional[float]:
    return num / denom if denom > 0 else None


def scalar_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, specificity, sensitivity, precision, F1 and balanced accuracy."""
    if cm.total < 1:
        raise ValueError("confusion matrix has no observations")
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    sensitivity = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    if precision is not None and sensitivity is not None and precision + sensitivity > 0:
        f1: Optional[float] = 2.0 * precision * sensitivity / (precision + sensitivity)
    else:
        f1 = None
    if sensitivity is not None and specificity is not None:
        balanced: Optional[float] = (sensitivity + specificity) / 2.0
    else:
        balanced = None
    return MetricsReport(
        confusion=cm,
        accuracy=accuracy,
        specificity=specificity,
        sensitivity=sensitivity,
        precision=precision,
        f1=f1,
        balanced_accuracy=balanced,
    )


def _sweep_counts(actual: np.ndarray, scores: np.ndarray):
    """Cumulative TP/FP at each distinct score, scanned from high to low."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_actual = actual[order]
    tp = np.cumsum(sorted_actual == 1)
    fp = np.cumsum(sorted_actual == 0)
    # Last index of every run of equal scores = counts with predicted
    # positive defined as score >= threshold.
    distinct = np.flatnonzero(np.r_[sorted_scores[1:] != sorted_scores[:-1], True])
    return sorted_scores[distinct], tp[distinct], fp[distinct]


def roc_curve(actual, scores) -> tuple[CurvePoints, float]:
    """ROC points per distinct threshold (descending) and the trapezoidal AUC.

    The curve is anchored at (0, 0) with threshold +inf and necessarily ends
    at (1, 1) once every row is classified positive.
    """
    a = _as_binary(actual, "actual")
    s = np.asarray(scores, dtype=np.float64)
    if a.shape != s.shape:
        raise ValueError("actual and scores must have equal length")
    n_pos = int((a == 1).sum())
    n_neg = int((a == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC requires at least one positive and one negative")

    thresholds, tp, fp = _sweep_counts(a, s)
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thr = np.r_[np.inf, thresholds]
    auc = float(0.5 * np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])))
    return CurvePoints(xs=fpr, ys=tpr, thresholds=thr), auc


def rank_auc(actual, scores) -> float:
    """ROC-AUC as the rank statistic P(score_pos > score_neg) + 0.5 P(equal)."""
    a = _as_binary(actual, "actual")
    s = np.asarray(scores, dtype=np.float64)
    if a.shape != s.shape:
        raise ValueError("actual and scores must have equal length")
    n_pos = int((a == 1).sum())
    n_neg = int((a == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC requires at least one positive and one negative")

    order = np.argsort(s, kind="stable")
    sorted_scores = s[order]
    ranks = np.empty(len(s), dtype=np.float64)
    # Average ranks over tie groups (1-based midranks).
    boundaries = np.r_[0, np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1, len(s)]
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[start:stop]] = 0.5 * (start + stop + 1)
    rank_sum_pos = float(ranks[a == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pr_curve(actual, scores) -> tuple[CurvePoints, float]:
    """Precision-recall points per distinct threshold and the average precision.

    The area is the step integral sum_k (recall_k - recall_{k-1}) * precision_k,
    which never interpolates between operating points.
    """
    a = _as_binary(actual, "actual")
    s = np.asarray(scores, dtype=np.float64)
    if a.shape != s.shape:
        raise ValueError("actual and scores must have equal length")
    n_pos = int((a == 1).sum())
    if n_pos == 0:
        raise ValueError("PR requires at least one positive")

    thresholds, tp, fp = _sweep_counts(a, s)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    auc = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return CurvePoints(xs=recall, ys=precision, thresholds=thresholds), auc
