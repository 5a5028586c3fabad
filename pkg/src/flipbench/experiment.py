"""Config-driven orchestration of the three experiment phases.

``run_clean`` trains the baseline forest, ``run_attack`` poisons the
training labels at each configured rate and retrains, and ``run_defense``
sanitizes each poisoned set with the K-NN defense and retrains on the
recovery.  Every phase derives its randomness from the master seed through
component-tagged child seeds, so phases are independently reproducible and
two runs of the same config produce byte-identical JSON reports (timings
aside).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attack import asr, flip_count, flip_labels, save_flip_indices
from .dataset import (
    LabeledDataset,
    PreprocessConfig,
    SplitDataset,
    generate_synthetic,
    load_csv,
    load_features_csv,
    preprocess,
    save_features_csv,
    split,
)
from .defense import DEFAULT_K_CANDIDATES, KSearchConfig, choose_k, sanitize, save_alarms_csv
from .errors import ConfigError, InvariantError
from .forest import ForestParams, accuracy, predict_classes, save_model, train_forest
from .metrics import confusion, rates

# Tags for deriving independent child seeds from the master seed.
_TAG_DATA, _TAG_SPLIT, _TAG_FOREST, _TAG_ATTACK = 0, 1, 2, 3


def subseed(master: int, *tags: int) -> int:
    """Stable component-tagged child seed (independent numpy stream)."""
    return int(np.random.SeedSequence([master, *tags]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """Everything a full three-phase run needs; see ``load_config``."""

    data: str = "synthetic"  # "synthetic" or a CSV path (url,label or f1..fk,label)
    synthetic_n: int = 1000
    synthetic_separation: float = 6.0
    split_ratio: float = 0.79
    seed: int = 0
    n_trees: int = 100
    max_features: int | None = None
    max_depth: int | None = 4
    min_samples_split: int = 2
    bootstrap: bool = True
    rates: tuple[float, ...] = (0.02, 0.03, 0.04, 0.05)
    k: int | None = None  # None -> choose automatically
    k_candidates: tuple[int, ...] = DEFAULT_K_CANDIDATES
    exclude_self: bool = True
    output_dir: str = "runs"

    def __post_init__(self):
        if not (0.0 < self.split_ratio < 1.0):
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.synthetic_n < 2:
            raise ConfigError(f"synthetic_n must be >= 2, got {self.synthetic_n}")
        if self.synthetic_separation <= 0:
            raise ConfigError("synthetic_separation must be > 0")
        self.rates = tuple(float(r) for r in self.rates)
        for r in self.rates:
            if not (0.0 <= r <= 1.0):
                raise ConfigError(f"poison rates must be in [0, 1], got {r}")
        if self.k is not None and (self.k < 1 or self.k % 2 == 0):
            raise ConfigError(f"k must be 'auto' or an odd integer >= 1, got {self.k}")
        self.k_candidates = tuple(int(k) for k in self.k_candidates)
        for k in self.k_candidates:
            if k < 1 or k % 2 == 0:
                raise ConfigError(f"k_candidates must be odd and >= 1, got {k}")


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _to_bool(key, raw):
    v = raw.lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _to_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")


def _to_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}")


_CONVERTERS = {
    "data": lambda k, v: v,
    "synthetic_n": _to_int,
    "synthetic_separation": _to_float,
    "split_ratio": _to_float,
    "seed": _to_int,
    "n_trees": _to_int,
    "max_features": lambda k, v: None if v.lower() == "auto" else _to_int(k, v),
    "max_depth": lambda k, v: None if v.lower() in ("none", "unlimited") else _to_int(k, v),
    "min_samples_split": _to_int,
    "bootstrap": _to_bool,
    "rates": lambda k, v: tuple(_to_float(k, p.strip()) for p in v.split(",") if p.strip()),
    "k": lambda k, v: None if v.lower() == "auto" else _to_int(k, v),
    "k_candidates": lambda k, v: tuple(_to_int(k, p.strip()) for p in v.split(",") if p.strip()),
    "exclude_self": _to_bool,
    "output_dir": lambda k, v: v,
}


def load_config(path) -> ExperimentConfig:
    """Parse the flat `key = value` config file.

    Blank lines and lines starting with '#' are skipped; unknown keys are
    an error so typos never silently fall back to defaults.
    """
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {s!r}")
            key, _, raw = s.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONVERTERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = _CONVERTERS[key](key, raw)
    return ExperimentConfig(**values)


@dataclass
class RunEntry:
    """One row of a phase report; fields that do not apply stay None."""

    rate: float
    poisoned_count: int | None = None
    train_accuracy: float = 0.0
    test_accuracy: float = 0.0
    asr: float | None = None
    detected_count: int | None = None
    true_alarm_count: int | None = None
    false_alarm_count: int | None = None
    k_used: int | None = None
    test_metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "poisoned_count": self.poisoned_count,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "asr": self.asr,
            "detected_count": self.detected_count,
            "true_alarm_count": self.true_alarm_count,
            "false_alarm_count": self.false_alarm_count,
            "k_used": self.k_used,
            "test_metrics": self.test_metrics,
        }


@dataclass
class RunReport:
    phase: str
    dataset_id: str
    train_rows: int
    test_rows: int
    seed: int
    entries: list[RunEntry]
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "dataset_id": self.dataset_id,
            "train_rows": self.train_rows,
            "test_rows": self.test_rows,
            "seed": self.seed,
            "entries": [e.to_dict() for e in self.entries],
            "timings": self.timings,
        }


def _dataset(cfg: ExperimentConfig) -> LabeledDataset:
    if cfg.data == "synthetic":
        return generate_synthetic(
            cfg.synthetic_n, cfg.synthetic_separation, subseed(cfg.seed, _TAG_DATA)
        )
    with open(cfg.data, encoding="utf-8") as fh:
        header = fh.readline().strip().lower()
    if header.startswith("url"):
        records = load_csv(cfg.data)
        return preprocess(records, PreprocessConfig(seed=subseed(cfg.seed, _TAG_DATA)))
    return load_features_csv(cfg.data, name=Path(cfg.data).stem)


def _split(cfg: ExperimentConfig, ds: LabeledDataset) -> SplitDataset:
    return split(ds, cfg.split_ratio, subseed(cfg.seed, _TAG_SPLIT))


def _forest_params(cfg: ExperimentConfig) -> ForestParams:
    return ForestParams(
        n_trees=cfg.n_trees,
        max_features=cfg.max_features,
        max_depth=cfg.max_depth,
        min_samples_split=cfg.min_samples_split,
        bootstrap=cfg.bootstrap,
        seed=subseed(cfg.seed, _TAG_FOREST),
    )


def _test_metrics(model, test: LabeledDataset) -> dict:
    report = rates(confusion(predict_classes(model, test.features), test.labels))
    report.asr = asr(model, test)
    return report.to_dict()


def _rate_label(rate: float) -> str:
    return f"{rate * 100:g}pct"


def emit_plot_data(ds: LabeledDataset, flipped, out_path) -> int:
    """Write `index,label,flipped` rows for scatter plots of the labels.

    ``flipped`` is an optional collection of poisoned row indices.
    Consumers draw the 0.5 line as the decision margin between the benign
    (0) and malicious (1) bands.  Returns the number of data rows written.
    """
    flipped_set = set(int(i) for i in flipped) if flipped is not None else set()
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "flipped"])
        for i in range(ds.n):
            writer.writerow([i, int(ds.labels[i]), 1 if i in flipped_set else 0])
    return ds.n


def run_clean(cfg: ExperimentConfig, outdir: Path | None = None) -> RunReport:
    """Train on the clean split and report baseline accuracies.

    When ``outdir`` is given, persists the model, the train/test feature
    CSVs, and the clean plot data for reuse by later phases.
    """
    t0 = time.perf_counter()
    ds = _dataset(cfg)
    sp = _split(cfg, ds)
    model = train_forest(sp.train, _forest_params(cfg))
    entry = RunEntry(
        rate=0.0,
        poisoned_count=0,
        train_accuracy=accuracy(model, sp.train),
        test_accuracy=accuracy(model, sp.test),
        test_metrics=_test_metrics(model, sp.test),
    )
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        save_model(model, outdir / "model_clean.json")
        save_features_csv(sp.train, outdir / "train.csv")
        save_features_csv(sp.test, outdir / "test.csv")
        emit_plot_data(sp.train, None, outdir / "plot_clean.csv")
    return RunReport(
        phase="clean",
        dataset_id=ds.id,
        train_rows=sp.train.n,
        test_rows=sp.test.n,
        seed=cfg.seed,
        entries=[entry],
        timings={"total_s": time.perf_counter() - t0},
    )


def run_attack(cfg: ExperimentConfig, outdir: Path | None = None) -> RunReport:
    """Flip training labels at each rate, retrain, and measure the damage.

    Training accuracy is measured against the poisoned labels (stated here
    because the two readings differ); test accuracy is measured on the
    clean test split, and asr on its complemented labels.
    """
    t0 = time.perf_counter()
    ds = _dataset(cfg)
    sp = _split(cfg, ds)
    params = _forest_params(cfg)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rate in enumerate(cfg.rates):
        result = flip_labels(sp.train, rate, subseed(cfg.seed, _TAG_ATTACK, i))
        model = train_forest(result.poisoned, params)
        entry = RunEntry(
            rate=rate,
            poisoned_count=result.count,
            train_accuracy=accuracy(model, result.poisoned),
            test_accuracy=accuracy(model, sp.test),
            asr=asr(model, sp.test),
            test_metrics=_test_metrics(model, sp.test),
        )
        _check_entry(entry, sp.train.n)
        entries.append(entry)
        if outdir is not None:
            label = _rate_label(rate)
            save_flip_indices(result, outdir / f"flips_{label}.csv")
            save_features_csv(result.poisoned, outdir / f"poisoned_{label}.csv")
            emit_plot_data(result.poisoned, result.flipped_indices, outdir / f"plot_poisoned_{label}.csv")
    return RunReport(
        phase="attack",
        dataset_id=ds.id,
        train_rows=sp.train.n,
        test_rows=sp.test.n,
        seed=cfg.seed,
        entries=entries,
        timings={"total_s": time.perf_counter() - t0},
    )


def run_defense(cfg: ExperimentConfig, outdir: Path | None = None) -> RunReport:
    """Sanitize each poisoned training set, retrain, and report recovery.

    The clean training split is the trusted reference.  K comes from the
    config when fixed, otherwise from ``choose_k`` on the reference.  True
    alarms are alarms at indices the attack actually flipped.
    """
    t0 = time.perf_counter()
    ds = _dataset(cfg)
    sp = _split(cfg, ds)
    params = _forest_params(cfg)
    ksearch = KSearchConfig(candidates=cfg.k_candidates, exclude_self=cfg.exclude_self)
    k_used = cfg.k if cfg.k is not None else choose_k(sp.train, sp.train, ksearch)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rate in enumerate(cfg.rates):
        result = flip_labels(sp.train, rate, subseed(cfg.seed, _TAG_ATTACK, i))
        defense = sanitize(sp.train, result.poisoned, k_used, cfg.exclude_self)
        model = train_forest(defense.recovered, params)
        flipped = set(result.flipped_indices.tolist())
        alarm_idx = {a.index for a in defense.alarms}
        entry = RunEntry(
            rate=rate,
            poisoned_count=result.count,
            train_accuracy=accuracy(model, defense.recovered),
            test_accuracy=accuracy(model, sp.test),
            detected_count=len(defense.alarms),
            true_alarm_count=len(alarm_idx & flipped),
            false_alarm_count=len(alarm_idx - flipped),
            k_used=k_used,
            test_metrics=_test_metrics(model, sp.test),
        )
        _check_entry(entry, sp.train.n)
        entries.append(entry)
        if outdir is not None:
            label = _rate_label(rate)
            save_features_csv(defense.recovered, outdir / f"recovered_{label}.csv")
            save_alarms_csv(defense.alarms, outdir / f"alarms_{label}.csv")
            emit_plot_data(defense.recovered, None, outdir / f"plot_recovered_{label}.csv")
    return RunReport(
        phase="defense",
        dataset_id=ds.id,
        train_rows=sp.train.n,
        test_rows=sp.test.n,
        seed=cfg.seed,
        entries=entries,
        timings={"total_s": time.perf_counter() - t0},
    )


def _check_entry(entry: RunEntry, n_train: int) -> None:
    """Report-consistency checks; a failure here is a bug, not bad input."""
    if entry.poisoned_count != flip_count(entry.rate, n_train):
        raise InvariantError(
            f"poisoned_count {entry.poisoned_count} != ceil({entry.rate} * {n_train})"
        )
    if entry.detected_count is not None:
        if entry.detected_count != entry.true_alarm_count + entry.false_alarm_count:
            raise InvariantError("detected_count != true_alarm_count + false_alarm_count")


def _pct(x: float) -> str:
    return f"{x * 100:.2f}%"


def render_tables(clean: RunReport, attack: RunReport, defense: RunReport) -> str:
    """Aligned text rendition of the three phase reports."""
    lines = []
    lines.append("Clean run")
    lines.append(f"  {'dataset':<20} {'tr. accuracy':>14} {'te. accuracy':>14}")
    e = clean.entries[0]
    lines.append(
        f"  {clean.dataset_id:<20} {_pct(e.train_accuracy):>14} {_pct(e.test_accuracy):>14}"
    )
    lines.append("")
    lines.append("Random label-flip attack")
    lines.append(
        f"  {'poison':>7} {'poisoned count':>15} {'tr. accuracy':>14} {'asr':>9}"
    )
    for e in attack.entries:
        lines.append(
            f"  {e.rate * 100:>6.4g}% {e.poisoned_count:>15} "
            f"{_pct(e.train_accuracy):>14} {_pct(e.asr):>9}"
        )
    lines.append("")
    lines.append(f"K-NN defense (K={defense.entries[0].k_used if defense.entries else '-'})")
    lines.append(
        f"  {'poison':>7} {'tr. accuracy':>14} {'detected':>9} {'true':>6} {'false':>6}"
    )
    for e in defense.entries:
        lines.append(
            f"  {e.rate * 100:>6.4g}% {_pct(e.train_accuracy):>14} "
            f"{e.detected_count:>9} {e.true_alarm_count:>6} {e.false_alarm_count:>6}"
        )
    lines.append("")
    return "\n".join(lines)


def write_report(report: RunReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def run_all(cfg: ExperimentConfig) -> tuple[RunReport, RunReport, RunReport]:
    """Run all three phases and write reports plus artifacts to output_dir."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    clean = run_clean(cfg, outdir)
    attack = run_attack(cfg, outdir)
    defense = run_defense(cfg, outdir)
    write_report(clean, outdir / "clean_report.json")
    write_report(attack, outdir / "attack_report.json")
    write_report(defense, outdir / "defense_report.json")
    (outdir / "tables.txt").write_text(render_tables(clean, attack, defense), encoding="utf-8")
    return clean, attack, defense
