"""Loading, cleaning, rescaling, splitting, and synthesizing labeled datasets.

A :class:`LabeledDataset` is an immutable-by-convention pair of a float64
feature matrix and a {0,1} label vector; everything downstream (forest,
attack, defense) operates on it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgError,
    EmptyAfterCleaning,
    LabelError,
    MalformedUrl,
    RatioError,
    SchemaError,
)
from .url_features import N_FEATURES, UrlRecord, extract_features, parse_url


@dataclass
class LabeledDataset:
    """Feature matrix plus binary labels, with optional source URL records."""

    features: np.ndarray
    labels: np.ndarray
    id: str = "dataset"
    records: list[UrlRecord] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ArgError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.ndim != 1 or len(self.labels) != self.features.shape[0]:
            raise ArgError(
                f"labels length {self.labels.shape} does not match "
                f"{self.features.shape[0]} feature rows"
            )
        if not np.isfinite(self.features).all():
            raise ArgError("features contain non-finite values")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise LabelError("labels must all be 0 or 1")
        if self.records is not None and len(self.records) != self.n:
            raise ArgError("records length does not match feature rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class SplitDataset:
    train: LabeledDataset
    test: LabeledDataset
    ratio: float
    seed: int


@dataclass
class PreprocessConfig:
    seed: int
    scale: bool = True
    dedup_hostnames: bool = True


def load_csv(path) -> list[UrlRecord]:
    """Read a `url,label` CSV into records.

    Raises SchemaError for a bad header, a wrong column count, or an empty
    URL (with the offending row number), and LabelError for labels outside
    {0, 1}.  I/O failures propagate as OSError.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected header 'url,label'")
        if [h.strip().lower() for h in header] != ["url", "label"]:
            raise SchemaError(f"{path}: expected header 'url,label', got {header!r}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}: row {lineno}: expected 2 columns, got {len(row)}")
            url, label = row[0].strip(), row[1].strip()
            if not url:
                raise SchemaError(f"{path}: row {lineno}: empty URL")
            if label not in ("0", "1"):
                raise LabelError(f"{path}: row {lineno}: label must be 0 or 1, got {label!r}")
            records.append(UrlRecord(raw=url, label=int(label)))
    return records


def iqr_rescale(column) -> np.ndarray:
    """Robust-rescale one feature column: (x - median) / (Q3 - Q1).

    Quartiles use linear interpolation (the numpy default).  A column with
    zero interquartile range maps to all zeros rather than dividing by zero.
    """
    x = np.asarray(column, dtype=np.float64)
    if x.size == 0:
        raise ArgError("cannot rescale an empty column")
    if not np.isfinite(x).all():
        raise ArgError("column contains non-finite values")
    q1, med, q3 = np.percentile(x, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    if iqr == 0.0:
        return np.zeros_like(x)
    return (x - med) / iqr


def preprocess(records: list[UrlRecord], cfg: PreprocessConfig) -> LabeledDataset:
    """Clean raw URL records into a shuffled, rescaled dataset.

    Steps, in order: drop exact duplicate URLs (first occurrence wins),
    drop records whose URL cannot be parsed, drop duplicate hostnames
    (first wins, unless ``cfg.dedup_hostnames`` is off), extract features,
    rescale each column by its interquartile range (unless ``cfg.scale``
    is off), then shuffle rows with a permutation seeded by ``cfg.seed``.
    """
    if not records:
        raise ArgError("records must be non-empty")

    seen_urls: set[str] = set()
    unique: list[UrlRecord] = []
    for rec in records:
        key = rec.raw.strip()
        if key in seen_urls:
            continue
        seen_urls.add(key)
        unique.append(rec)

    parsed = []
    for rec in unique:
        try:
            parsed.append((rec, parse_url(rec.raw)))
        except MalformedUrl:
            continue  # unparsable rows are dropped, not fatal

    if cfg.dedup_hostnames:
        seen_hosts: set[str] = set()
        deduped = []
        for rec, parts in parsed:
            if parts.hostname in seen_hosts:
                continue
            seen_hosts.add(parts.hostname)
            deduped.append((rec, parts))
        parsed = deduped

    if not parsed:
        raise EmptyAfterCleaning("no records survived cleaning")

    feats = np.vstack([extract_features(rec.raw) for rec, _ in parsed])
    labels = np.array([rec.label for rec, _ in parsed], dtype=np.int64)
    if cfg.scale:
        feats = np.column_stack([iqr_rescale(feats[:, j]) for j in range(feats.shape[1])])

    order = np.random.default_rng(cfg.seed).permutation(len(parsed))
    return LabeledDataset(
        features=feats[order],
        labels=labels[order],
        id="urls",
        records=[parsed[i][0] for i in order],
    )


def _take(ds: LabeledDataset, idx: np.ndarray, name: str) -> LabeledDataset:
    records = [ds.records[i] for i in idx] if ds.records is not None else None
    return LabeledDataset(ds.features[idx], ds.labels[idx], id=name, records=records)


def split(ds: LabeledDataset, ratio: float, seed: int) -> SplitDataset:
    """Shuffle with a seeded permutation, then cut into train/test.

    The training side gets floor(ratio * N) rows; the remainder is the
    test side.  Every source row lands in exactly one side.
    """
    if not (0.0 < ratio < 1.0):
        raise RatioError(f"split ratio must be in (0, 1), got {ratio}")
    if ds.n < 2:
        raise ArgError("need at least 2 rows to split")
    n_train = math.floor(ratio * ds.n)
    perm = np.random.default_rng(seed).permutation(ds.n)
    return SplitDataset(
        train=_take(ds, perm[:n_train], f"{ds.id}-train"),
        test=_take(ds, perm[n_train:], f"{ds.id}-test"),
        ratio=ratio,
        seed=seed,
    )


def generate_synthetic(
    n: int, class_separation: float, seed: int, dim: int = N_FEATURES
) -> LabeledDataset:
    """Two seeded Gaussian clusters: a desk-scale stand-in for URL corpora.

    Class 0 is centered at -separation/2 on every coordinate and class 1
    at +separation/2, both with unit variance.  The first n//2 rows carry
    label 0 and the rest label 1; callers that need mixed order should
    :func:`split` or shuffle downstream.
    """
    if n < 2:
        raise ArgError(f"need n >= 2, got {n}")
    if class_separation <= 0:
        raise ArgError(f"class_separation must be > 0, got {class_separation}")
    rng = np.random.default_rng(seed)
    n0 = n // 2
    feats = rng.standard_normal((n, dim))
    feats[:n0] -= class_separation / 2.0
    feats[n0:] += class_separation / 2.0
    labels = np.concatenate([np.zeros(n0, np.int64), np.ones(n - n0, np.int64)])
    return LabeledDataset(feats, labels, id=f"synthetic-{n}")


def save_features_csv(ds: LabeledDataset, path) -> None:
    """Write a dataset as `f1..fk,label` CSV; floats round-trip exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j + 1}" for j in range(ds.dim)] + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_features_csv(path, name: str | None = None) -> LabeledDataset:
    """Read a `f1..fk,label` CSV written by :func:`save_features_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected 'f1..fk,label' header")
        header = [h.strip().lower() for h in header]
        k = len(header) - 1
        if k < 1 or header != [f"f{j + 1}" for j in range(k)] + ["label"]:
            raise SchemaError(f"{path}: expected header 'f1..fk,label', got {header!r}")
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 1:
                raise SchemaError(f"{path}: row {lineno}: expected {k + 1} columns, got {len(row)}")
            if row[-1].strip() not in ("0", "1"):
                raise LabelError(f"{path}: row {lineno}: label must be 0 or 1, got {row[-1]!r}")
            try:
                rows.append([float(v) for v in row[:-1]])
            except ValueError as exc:
                raise SchemaError(f"{path}: row {lineno}: {exc}")
            labels.append(int(row[-1]))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return LabeledDataset(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        id=name or str(path),
    )
