"""Command-line front end.

Subcommands cover the whole pipeline: ``ingest`` and ``synth`` produce
feature CSVs, ``train`` fits and saves a forest, ``attack`` poisons a
training set, ``defend`` sanitizes one, ``run`` executes the full
three-phase experiment from a config file, and ``plotdata`` emits figure
data.  Exit codes: 0 success, 1 usage or config error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .attack import flip_labels, save_flip_indices
from .dataset import (
    PreprocessConfig,
    generate_synthetic,
    load_csv,
    load_features_csv,
    preprocess,
    save_features_csv,
)
from .defense import KSearchConfig, choose_k, format_alarm, sanitize, save_alarms_csv
from .errors import ConfigError, DataError
from .experiment import emit_plot_data, load_config, run_all
from .forest import ForestParams, accuracy, save_model, train_forest


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise ConfigError(message)


def _rate_arg(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
    if not (0.0 <= v <= 1.0):
        raise argparse.ArgumentTypeError(f"rate must be in [0, 1], got {s}")
    return v


def _seed_arg(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def _trees_arg(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("need at least 1 tree")
    return v


def _k_arg(s: str):
    if s.lower() == "auto":
        return None
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an odd integer, got {s!r}")
    if v < 1 or v % 2 == 0:
        raise argparse.ArgumentTypeError(f"K must be odd and >= 1, got {s}")
    return v


def _cmd_ingest(args) -> int:
    records = load_csv(args.input)
    ds = preprocess(records, PreprocessConfig(seed=args.seed))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "features.csv"
    save_features_csv(ds, out)
    print(f"ingested {len(records)} rows -> {ds.n} after cleaning -> {out}")
    return 0


def _cmd_synth(args) -> int:
    ds = generate_synthetic(args.n, args.separation, args.seed)
    save_features_csv(ds, args.output)
    print(f"wrote {ds.n} rows x {ds.dim} features -> {args.output}")
    return 0


def _cmd_train(args) -> int:
    ds = load_features_csv(args.data)
    params = ForestParams(n_trees=args.trees, seed=args.seed)
    model = train_forest(ds, params)
    save_model(model, args.model)
    print(
        f"trained {args.trees} trees on {ds.n} rows; "
        f"training accuracy {accuracy(model, ds):.4f} -> {args.model}"
    )
    return 0


def _cmd_attack(args) -> int:
    ds = load_features_csv(args.data)
    result = flip_labels(ds, args.rate, args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_features_csv(result.poisoned, outdir / "poisoned.csv")
    save_flip_indices(result, outdir / "flipped_indices.csv")
    print(f"flipped {result.count} of {ds.n} labels (rate {args.rate}) -> {outdir}")
    return 0


def _cmd_defend(args) -> int:
    reference = load_features_csv(args.reference)
    untrusted = load_features_csv(args.untrusted)
    exclude_self = not args.include_self
    if args.k is None:
        k = choose_k(reference, untrusted, KSearchConfig(exclude_self=exclude_self))
        print(f"chose K={k}")
    else:
        k = args.k
    result = sanitize(reference, untrusted, k, exclude_self)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_features_csv(result.recovered, outdir / "recovered.csv")
    save_alarms_csv(result.alarms, outdir / "alarms.csv")
    for alarm in result.alarms:
        print(format_alarm(alarm))
    print(f"{len(result.alarms)} alarms raised (K={k}) -> {outdir}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    clean, attack, defense = run_all(cfg)
    print(f"reports written to {cfg.output_dir}")
    print(f"clean: train {clean.entries[0].train_accuracy:.4f} "
          f"test {clean.entries[0].test_accuracy:.4f}")
    for e in attack.entries:
        print(f"attack {e.rate:.2%}: {e.poisoned_count} flips, "
              f"train {e.train_accuracy:.4f}, asr {e.asr:.4f}")
    for e in defense.entries:
        print(f"defense {e.rate:.2%}: detected {e.detected_count} "
              f"({e.true_alarm_count} true, {e.false_alarm_count} false), "
              f"train {e.train_accuracy:.4f}")
    return 0


def _cmd_plotdata(args) -> int:
    ds = load_features_csv(args.data)
    flipped = None
    if args.flips:
        with open(args.flips, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != ["index"]:
                raise DataError(f"{args.flips}: expected one-column 'index' CSV")
            flipped = [int(row[0]) for row in reader if row]
    n = emit_plot_data(ds, flipped, args.output)
    print(f"wrote {n} plot rows -> {args.output}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="flipbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean a url,label CSV into a feature CSV")
    p.add_argument("--input", required=True, help="CSV with header url,label")
    p.add_argument("--seed", type=_seed_arg, default=0)
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--seed", type=_seed_arg, default=0)
    p.add_argument("--output", required=True, help="output feature CSV")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a forest on a feature CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--trees", type=_trees_arg, default=100)
    p.add_argument("--seed", type=_seed_arg, default=0)
    p.add_argument("--model", required=True, help="output model JSON")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("attack", help="flip random training labels")
    p.add_argument("--data", required=True)
    p.add_argument("--rate", type=_rate_arg, required=True)
    p.add_argument("--seed", type=_seed_arg, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("defend", help="K-NN sanitize an untrusted dataset")
    p.add_argument("--reference", required=True, help="trusted feature CSV")
    p.add_argument("--untrusted", required=True, help="feature CSV to sanitize")
    p.add_argument("--k", type=_k_arg, default=None, help="'auto' or an odd integer")
    p.add_argument("--include-self", action="store_true",
                   help="let each row count as its own nearest neighbor")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_defend)

    p = sub.add_parser("run", help="full clean/attack/defense experiment")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plotdata", help="emit index,label,flipped plot rows")
    p.add_argument("--data", required=True)
    p.add_argument("--flips", default=None, help="one-column index CSV of flipped rows")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_plotdata)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # InvariantError and anything unexpected
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
