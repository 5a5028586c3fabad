"""Random label-flipping attack on a training set, plus attack success rate.

The attacker is class-blind: it draws ceil(rate * N) distinct row indices
uniformly without replacement and inverts each label (0 <-> 1), leaving
features untouched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .errors import ArgError, RateError
from .forest import ForestModel, predict_classes


@dataclass
class AttackResult:
    poisoned: LabeledDataset
    flipped_indices: np.ndarray  # sorted, distinct row indices
    rate: float
    seed: int

    @property
    def count(self) -> int:
        return int(self.flipped_indices.size)


def flip_count(rate: float, n: int) -> int:
    """Number of rows poisoned at ``rate``: ceil(rate * n)."""
    return math.ceil(rate * n)


def flip_labels(train: LabeledDataset, rate: float, seed: int) -> AttackResult:
    """Poison a training set by inverting ceil(rate * N) random labels.

    Both classes are eligible.  Flipping the same index set twice is the
    identity, so re-running with the same seed on the poisoned output
    restores the original labels.
    """
    if not (0.0 <= rate <= 1.0):
        raise RateError(f"poison rate must be in [0, 1], got {rate}")
    m = flip_count(rate, train.n)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(train.n, size=m, replace=False))
    labels = train.labels.copy()
    labels[idx] = 1 - labels[idx]
    poisoned = LabeledDataset(
        train.features, labels, id=f"{train.id}-poisoned", records=train.records
    )
    return AttackResult(poisoned=poisoned, flipped_indices=idx, rate=rate, seed=seed)


def asr(model: ForestModel, test: LabeledDataset) -> float:
    """Attack success rate: accuracy against fully complemented test labels.

    Every test label y is replaced by 1 - y before scoring, so for binary
    labels asr == 1 - clean accuracy exactly; it measures the model's
    error rate from the attacker's point of view.
    """
    if test.n == 0:
        raise ArgError("asr needs a non-empty test set")
    preds = predict_classes(model, test.features)
    return float(np.mean(preds == 1 - test.labels))


def save_flip_indices(result: AttackResult, path) -> None:
    """One-column audit CSV of the flipped row indices."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index"])
        for i in result.flipped_indices:
            writer.writerow([int(i)])
