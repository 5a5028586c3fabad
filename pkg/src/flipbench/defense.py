"""K-NN label sanitization: alarm on suspect labels and restore true ones.

Each untrusted label is re-predicted from the K nearest rows of a trusted
reference dataset (Euclidean distance, ties to the lower row index).  A
mismatch raises an alarm and the predicted label overwrites the untrusted
one.  ``choose_k`` scans an odd-K candidate ladder for the smallest K whose
predictions reproduce the reference labels exactly.

Two reference modes exist:

* ``exclude_self=True`` (default): row i of the reference never counts as
  its own neighbor, so predictions carry real information and the chosen K
  is non-trivial.
* ``exclude_self=False``: a distance-0 self-match dominates, which makes
  recovery exact whenever reference and untrusted share features; useful
  as a baseline and for audits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset
from .errors import DimensionError, KError

DEFAULT_K_CANDIDATES: tuple[int, ...] = tuple(range(1, 40, 2))


@dataclass
class KSearchConfig:
    """Odd-only candidate ladder for K selection (odd K is never tied)."""

    candidates: tuple[int, ...] = DEFAULT_K_CANDIDATES
    exclude_self: bool = True

    def __post_init__(self):
        self.candidates = tuple(int(k) for k in self.candidates)
        if not self.candidates:
            raise KError("candidate list must be non-empty")
        for k in self.candidates:
            if k < 1 or k % 2 == 0:
                raise KError(f"candidates must be odd and >= 1, got {k}")


@dataclass
class Alarm:
    index: int
    old_label: int
    predicted_label: int


@dataclass
class DefenseResult:
    recovered: LabeledDataset
    alarms: list[Alarm]
    k_used: int
    mismatch_count: int


def _available(reference: LabeledDataset, excluding: bool) -> int:
    return reference.n - 1 if excluding else reference.n


def _check_k(k: int, available: int) -> None:
    if k < 1 or k % 2 == 0:
        raise KError(f"K must be odd and >= 1, got {k}")
    if k > available:
        raise KError(f"K={k} exceeds the {available} available reference rows")


def _neighbor_order(reference: LabeledDataset, vec: np.ndarray, skip: int | None) -> np.ndarray:
    """Row indices sorted by Euclidean distance, ties by lower index."""
    d = np.sqrt(((reference.features - vec) ** 2).sum(axis=1))
    if skip is not None:
        d[skip] = np.inf
    return np.argsort(d, kind="stable")


def _mode(labels: np.ndarray, k: int) -> int:
    return 1 if 2 * int(labels[:k].sum()) > k else 0


def knn_predict(
    reference: LabeledDataset,
    query,
    k: int,
    exclude_self: bool = False,
) -> int:
    """Mode of the K nearest reference labels for a row index or a vector.

    ``query`` may be an integer row index into ``reference`` (in which
    case ``exclude_self`` skips that row) or a feature vector, for which
    ``exclude_self`` has no effect.
    """
    if isinstance(query, (int, np.integer)):
        i = int(query)
        if not 0 <= i < reference.n:
            raise DimensionError(f"row index {i} out of range for {reference.n} rows")
        vec = reference.features[i]
        skip = i if exclude_self else None
    else:
        vec = np.asarray(query, dtype=np.float64)
        if vec.shape != (reference.dim,):
            raise DimensionError(f"expected a {reference.dim}-vector, got shape {vec.shape}")
        skip = None
    _check_k(k, _available(reference, skip is not None))
    order = _neighbor_order(reference, vec, skip)
    return _mode(reference.labels[order], k)


def _check_same_shape(reference: LabeledDataset, untrusted: LabeledDataset) -> None:
    if reference.n != untrusted.n or reference.dim != untrusted.dim:
        raise DimensionError(
            f"reference {reference.features.shape} and untrusted "
            f"{untrusted.features.shape} must have the same shape"
        )


def choose_k(
    reference: LabeledDataset,
    untrusted: LabeledDataset,
    cfg: KSearchConfig | None = None,
) -> int:
    """Smallest candidate K whose predictions match every reference label.

    Mismatches are counted against the reference (clean) labels, the only
    basis on which a zero count is attainable when the untrusted copy is
    poisoned.  If no candidate reaches zero, the K with the fewest
    mismatches wins (smallest K on ties).  Candidates larger than the
    reference allows are skipped; if none fit, KError.
    """
    cfg = cfg or KSearchConfig()
    _check_same_shape(reference, untrusted)
    if not np.array_equal(reference.features, untrusted.features):
        raise DimensionError("reference and untrusted must share the same feature matrix")

    available = _available(reference, cfg.exclude_self)
    candidates = [k for k in cfg.candidates if k <= available]
    if not candidates:
        raise KError(
            f"no candidate K fits {available} available reference rows "
            f"(smallest candidate is {min(cfg.candidates)})"
        )

    mismatches = {k: 0 for k in candidates}
    kmax = max(candidates)
    for i in range(reference.n):
        skip = i if cfg.exclude_self else None
        order = _neighbor_order(reference, reference.features[i], skip)
        cum = np.cumsum(reference.labels[order[:kmax]])
        for k in candidates:
            pred = 1 if 2 * int(cum[k - 1]) > k else 0
            if pred != reference.labels[i]:
                mismatches[k] += 1

    for k in candidates:  # ascending scan: smallest exact K wins
        if mismatches[k] == 0:
            return k
    return min(candidates, key=lambda k: (mismatches[k], k))


def sanitize(
    reference: LabeledDataset,
    untrusted: LabeledDataset,
    k: int,
    exclude_self: bool = True,
) -> DefenseResult:
    """Re-predict every untrusted label from the reference; alarm on mismatch.

    For each row i the K nearest reference rows (skipping reference row i
    when ``exclude_self``) vote a predicted label.  Rows where the vote
    disagrees with the untrusted label are alarmed and overwritten with
    the prediction; all other labels are copied through.  Untrusted labels
    are read only for the comparison, never for the prediction.
    """
    _check_same_shape(reference, untrusted)
    _check_k(k, _available(reference, exclude_self))
    recovered_labels = untrusted.labels.copy()
    alarms: list[Alarm] = []
    for i in range(untrusted.n):
        skip = i if exclude_self else None
        order = _neighbor_order(reference, untrusted.features[i], skip)
        pred = _mode(reference.labels[order], k)
        if pred != untrusted.labels[i]:
            alarms.append(Alarm(index=i, old_label=int(untrusted.labels[i]), predicted_label=pred))
            recovered_labels[i] = pred
    recovered = LabeledDataset(
        untrusted.features,
        recovered_labels,
        id=f"{untrusted.id}-recovered",
        records=untrusted.records,
    )
    return DefenseResult(
        recovered=recovered, alarms=alarms, k_used=k, mismatch_count=len(alarms)
    )


def format_alarm(alarm: Alarm) -> str:
    return (
        f"LF attack suspected at row {alarm.index}: "
        f"label {alarm.old_label} restored to {alarm.predicted_label}"
    )


def save_alarms_csv(alarms: list[Alarm], path) -> None:
    """Audit CSV of alarms: `index,old_label,predicted_label`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "old_label", "predicted_label"])
        for a in alarms:
            writer.writerow([a.index, a.old_label, a.predicted_label])
