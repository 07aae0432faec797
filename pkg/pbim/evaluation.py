"""Evaluation quantities — confusion counts, precision/recall metrics, ROC with EER and AUC."""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ArgumentError(f"Confusion counts must be non-negative, got {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predictions: Sequence[int], labels: Sequence[int]) -> "ConfusionCounts":
        if len(predictions) != len(labels):
            raise ArgumentError(f"{len(predictions)} predictions but {len(labels)} labels")
        pred = np.asarray(predictions) > 0
        truth = np.asarray(labels) > 0
        return cls(tp=int(np.sum(pred & truth)), fp=int(np.sum(pred & ~truth)),
                   tn=int(np.sum(~pred & ~truth)), fn=int(np.sum(~pred & truth)))


@dataclass(frozen=True)
class Metrics:
    """
    Detection metrics; a value is None (and named in `absent`) when its
    denominator is zero. `one_minus_precision_gt` divides by ground-truth positives.
    """
    recall: Optional[float]
    one_minus_precision: Optional[float]
    classification_rate: Optional[float]
    one_minus_precision_gt: Optional[float] = None
    absent: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, object]:
        return {
            "recall": self.recall,
            "one_minus_precision": self.one_minus_precision,
            "one_minus_precision_gt": self.one_minus_precision_gt,
            "classification_rate": self.classification_rate,
            "absent": list(self.absent),
        }


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def metrics(c: ConfusionCounts) -> Metrics:
    values = {
        "recall": _ratio(c.tp, c.tp + c.fn),
        "one_minus_precision": _ratio(c.fp, c.tp + c.fp),
        "classification_rate": _ratio(c.tp + c.tn, c.total),
        "one_minus_precision_gt": _ratio(c.fp, c.tp + c.fn),
    }
    absent = tuple(name for name, v in values.items() if v is None)
    return Metrics(absent=absent, **values)


@dataclass(frozen=True)
class RocSummary:
    points: Tuple[Tuple[float, float], ...]
    auc: float
    eer_detection_rate: float

    def as_dict(self) -> Dict[str, object]:
        return {
            "auc": self.auc,
            "eer_detection_rate": self.eer_detection_rate,
            "points": [list(p) for p in self.points],
        }


def _check_binary(scores: Sequence[float], labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ArgumentError(f"Scores {s.shape} and labels {y.shape} must be matching 1-D lists")
    positive = y > 0
    if positive.all() or not positive.any():
        raise ArgumentError("ROC needs both positive and negative labels")
    return s, positive


def _threshold_counts(scores: Sequence[float], labels: Sequence[int]):
    """Cumulative (tp, fp) after each block of tied scores, thresholds descending."""
    s, positive = _check_binary(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, positive = s[order], positive[order]
    block_ends = np.nonzero(np.diff(s))[0].tolist() + [len(s) - 1]
    tps = np.cumsum(positive)[block_ends]
    fps = np.cumsum(~positive)[block_ends]
    return tps, fps, int(positive.sum()), int((~positive).sum())


def trapezoid_area(points: Sequence[Tuple[float, float]]) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def equal_error_detection_rate(points: Sequence[Tuple[float, float]]) -> float:
    """TPR where the curve crosses TPR = 1 − FPR, interpolated linearly."""
    gaps = [tpr + fpr - 1.0 for fpr, tpr in points]
    for i, gap in enumerate(gaps):
        if gap == 0.0:
            return points[i][1]
        if gap > 0.0:
            (f0, t0), (f1, t1) = points[i - 1], points[i]
            a = -gaps[i - 1] / (gap - gaps[i - 1])
            return t0 + a * (t1 - t0)
    return points[-1][1]


def roc(scores: Sequence[float], labels: Sequence[int]) -> RocSummary:
    """ROC over every distinct threshold, ties processed as one block."""
    tps, fps, n_pos, n_neg = _threshold_counts(scores, labels)
    points = [(0.0, 0.0)] + [(fp / n_neg, tp / n_pos) for tp, fp in zip(tps.tolist(), fps.tolist())]
    return RocSummary(tuple(points), trapezoid_area(points), equal_error_detection_rate(points))


def recall_precision_curve(scores: Sequence[float], labels: Sequence[int]) -> List[Tuple[float, float]]:
    """(1 − precision, recall) at every distinct threshold, thresholds descending."""
    tps, fps, n_pos, _ = _threshold_counts(scores, labels)
    return [(fp / (tp + fp), tp / n_pos) for tp, fp in zip(tps.tolist(), fps.tolist())]
