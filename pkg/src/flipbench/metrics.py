"""Confusion matrix and the derived evaluation rates.

The positive class is label 1 (malicious).  A rate whose denominator is
zero is reported as NaN, an explicit "undefined" marker, rather than 0 or
an error, so degenerate reports never look silently perfect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgError, EmptyMatrixError, LabelError, LengthError


@dataclass
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            v = getattr(self, name)
            if v < 0:
                raise ArgError(f"{name} must be non-negative, got {v}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class MetricsReport:
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    accuracy: float
    asr: float | None = None

    def to_dict(self) -> dict:
        def clean(v):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return None
            return v

        return {
            "tpr": clean(self.tpr),
            "tnr": clean(self.tnr),
            "fpr": clean(self.fpr),
            "fnr": clean(self.fnr),
            "accuracy": clean(self.accuracy),
            "asr": clean(self.asr),
        }


def confusion(predictions, truth) -> ConfusionMatrix:
    """Tally TP/TN/FP/FN between two equal-length binary vectors."""
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.ndim != 1 or t.ndim != 1 or p.size != t.size or p.size == 0:
        raise LengthError(f"need equal-length vectors of length >= 1, got {p.size} and {t.size}")
    for arr, name in ((p, "predictions"), (t, "truth")):
        if not np.isin(arr, (0, 1)).all():
            raise LabelError(f"{name} must be binary 0/1")
    return ConfusionMatrix(
        tp=int(np.count_nonzero((p == 1) & (t == 1))),
        tn=int(np.count_nonzero((p == 0) & (t == 0))),
        fp=int(np.count_nonzero((p == 1) & (t == 0))),
        fn=int(np.count_nonzero((p == 0) & (t == 1))),
    )


def _rate(num: int, den: int) -> float:
    return num / den if den else math.nan


def rates(cm: ConfusionMatrix) -> MetricsReport:
    """TPR, TNR, FPR, FNR, and accuracy from a confusion matrix."""
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix has no samples")
    return MetricsReport(
        tpr=_rate(cm.tp, cm.tp + cm.fn),
        tnr=_rate(cm.tn, cm.tn + cm.fp),
        fpr=_rate(cm.fp, cm.fp + cm.tn),
        fnr=_rate(cm.fn, cm.fn + cm.tp),
        accuracy=(cm.tp + cm.tn) / cm.total,
    )
