"""End-to-end acceptance suite.

Every criterion below runs at its stated tolerance against the default
experiment configuration (seeded synthetic data, 1000 rows, separation 6,
79/21 split, 100-tree forest).  Each test prints one PASS line; run with
``pytest tests/test_acceptance.py -v -s`` to see them.
"""

import dataclasses
import json
import math
import time

import numpy as np
import pytest

from flipbench import cli
from flipbench.attack import flip_labels
from flipbench.dataset import LabeledDataset, generate_synthetic
from flipbench.defense import KSearchConfig, choose_k, knn_predict
from flipbench.experiment import ExperimentConfig, run_attack, run_clean, run_defense
from flipbench.forest import ForestParams, gini, predict_values, train_forest
from flipbench.metrics import ConfusionMatrix, rates

MASTER_SEED = 7
CFG = ExperimentConfig(seed=MASTER_SEED)


@pytest.fixture(scope="module")
def clean_report():
    return run_clean(CFG)


@pytest.fixture(scope="module")
def attack_report():
    return run_attack(CFG)


@pytest.fixture(scope="module")
def defense_report():
    return run_defense(CFG)


def test_c1_clean_baseline():
    t0 = time.perf_counter()
    report = run_clean(CFG)
    elapsed = time.perf_counter() - t0
    entry = report.entries[0]
    assert entry.train_accuracy >= 0.998
    assert entry.test_accuracy >= 0.99
    assert elapsed < 30.0
    print(f"ACCEPTANCE 1 PASS: clean baseline train={entry.train_accuracy:.4f} "
          f"test={entry.test_accuracy:.4f} in {elapsed:.1f}s")


def test_c2_attack_accuracy_law(attack_report):
    assert attack_report.train_rows == 790
    expected_counts = {0.02: 16, 0.03: 24, 0.04: 32, 0.05: 40}
    assert [e.rate for e in attack_report.entries] == sorted(expected_counts)
    for e in attack_report.entries:
        assert e.poisoned_count == expected_counts[e.rate]
        assert abs(e.train_accuracy - (1.0 - e.rate)) <= 0.02, (e.rate, e.train_accuracy)
    accs = {e.rate: e.train_accuracy for e in attack_report.entries}
    print(f"ACCEPTANCE 2 PASS: poisoned counts {list(expected_counts.values())}, "
          f"train accuracies {[f'{a:.4f}' for a in accs.values()]}")


def test_c3_asr_identity(clean_report, attack_report, defense_report):
    checked = 0
    for report in (clean_report, attack_report, defense_report):
        for e in report.entries:
            m = e.test_metrics
            assert abs(m["asr"] + m["accuracy"] - 1.0) <= 1e-12
            checked += 1
            if e.asr is not None:
                assert abs(e.asr + e.test_accuracy - 1.0) <= 1e-12
    print(f"ACCEPTANCE 3 PASS: asr + clean accuracy == 1 within 1e-12 "
          f"on all {checked} runs")


def test_c4_self_match_defense(clean_report):
    cfg = dataclasses.replace(CFG, exclude_self=False, k=1)
    report = run_defense(cfg)
    baseline = clean_report.entries[0].train_accuracy
    for e in report.entries:
        assert e.true_alarm_count == e.poisoned_count  # every flip alarmed
        assert e.false_alarm_count == 0
        assert e.detected_count == e.poisoned_count
        assert abs(e.train_accuracy - baseline) <= 0.002  # within 0.2 points
    print(f"ACCEPTANCE 4 PASS: self-match defense recovered every flip at "
          f"all rates, baseline accuracy restored ({baseline:.4f})")


def test_c5_realistic_defense(defense_report):
    for e in defense_report.entries:
        clean_rows = defense_report.train_rows - e.poisoned_count
        assert e.true_alarm_count >= 0.9 * e.poisoned_count
        assert e.false_alarm_count <= 0.03 * clean_rows
    rates_seen = [f"{e.true_alarm_count}/{e.poisoned_count}" for e in defense_report.entries]
    print(f"ACCEPTANCE 5 PASS: exclude-self defense alarmed {rates_seen} flips "
          f"with false-alarm rate <= 3%")


def test_c6_k_selection(defense_report):
    k_used = defense_report.entries[0].k_used
    assert k_used in set(range(1, 40, 2))

    ds = generate_synthetic(200, 6.0, seed=31)
    assert choose_k(ds, ds, KSearchConfig(exclude_self=False)) == 1

    crafted = LabeledDataset(
        np.array([0.0, 2.2, 2.6, 3.0, 3.3, 3.9, 3.95, 10.0])[:, None],
        np.array([0, 0, 0, 0, 1, 1, 1, 1]),
        id="crafted",
    )
    cfg = KSearchConfig()
    assert choose_k(crafted, crafted, cfg) == 3
    assert choose_k(crafted, crafted, cfg) == 3  # deterministic
    print(f"ACCEPTANCE 6 PASS: auto K={k_used} odd and in 1..39; self-match "
          f"K=1; crafted instance K=3")


def test_c7_knn_oracle_equivalence():
    def oracle_order(ds, vec, skip):
        scored = []
        for j in range(ds.n):
            if j == skip:
                continue
            d = math.sqrt(sum((float(a) - float(b)) ** 2
                              for a, b in zip(vec, ds.features[j])))
            scored.append((d, j))
        scored.sort()
        return [j for _, j in scored]

    rng = np.random.default_rng(1234)
    queries = 0
    for block in range(10):
        n = int(rng.integers(20, 101))
        ds = generate_synthetic(n, 1.0, seed=600 + block)
        for q in range(100):
            kind = q % 3
            if kind == 0:
                i, skip = int(rng.integers(0, n)), None
                vec, args = ds.features[i], (ds, i, False)
            elif kind == 1:
                i = int(rng.integers(0, n))
                vec, skip, args = ds.features[i], i, (ds, i, True)
            else:
                vec, skip, args = rng.normal(size=ds.dim), None, (ds, None, False)
            order = oracle_order(ds, vec, skip)
            for k in (1, 3, 5, 7, 9, 11):
                expected = 1 if 2 * sum(int(ds.labels[j]) for j in order[:k]) > k else 0
                ref, query, excl = args
                query = vec if query is None else query
                assert knn_predict(ref, query, k, exclude_self=excl) == expected
            queries += 1
    assert queries == 1000
    print(f"ACCEPTANCE 7 PASS: knn matches the brute-force oracle on "
          f"{queries} queries for all odd K <= 11")


def test_c8_algebraic_identities():
    # flip involution over 100 seeds
    ds = generate_synthetic(97, 6.0, seed=41)
    rng = np.random.default_rng(42)
    for seed in range(100):
        rate = float(rng.uniform(0.0, 1.0))
        once = flip_labels(ds, rate, seed)
        twice = flip_labels(once.poisoned, rate, seed)
        assert np.array_equal(twice.poisoned.labels, ds.labels)

    # complement identities on 1000 random confusion matrices
    for _ in range(1000):
        tp, tn, fp, fn = (int(v) for v in rng.integers(1, 400, size=4))
        r = rates(ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn))
        assert abs(r.tpr + r.fnr - 1.0) <= 1e-12
        assert abs(r.tnr + r.fpr - 1.0) <= 1e-12

    # gini bounds
    for _ in range(500):
        y = rng.integers(0, 2, size=int(rng.integers(1, 80)))
        assert 0.0 <= gini(y) <= 0.5

    # predicted values stay inside [0, 1]
    for seed in range(3):
        data = generate_synthetic(120, 1.0, seed=seed)
        model = train_forest(data, ForestParams(n_trees=11, seed=seed))
        vals = predict_values(model, rng.normal(size=(100, data.dim)))
        assert ((vals >= 0.0) & (vals <= 1.0)).all()
    print("ACCEPTANCE 8 PASS: involution x100 seeds, rate identities x1000, "
          "gini bounds, predicted values in [0,1]")


def test_c9_pipeline_determinism(tmp_path):
    def config_text(outdir):
        return (
            "data = synthetic\n"
            "synthetic_n = 400\n"
            "n_trees = 30\n"
            f"seed = {MASTER_SEED}\n"
            "rates = 0.02,0.05\n"
            f"output_dir = {outdir}\n"
        )

    reports = []
    for tag in ("a", "b"):
        cfg_path = tmp_path / f"exp_{tag}.cfg"
        cfg_path.write_text(config_text(tmp_path / f"out_{tag}"), encoding="utf-8")
        assert cli.main(["run", "--config", str(cfg_path)]) == 0
        snapshot = {}
        for name in ("clean_report.json", "attack_report.json", "defense_report.json"):
            doc = json.loads((tmp_path / f"out_{tag}" / name).read_text())
            doc.pop("timings")
            snapshot[name] = json.dumps(doc, sort_keys=True)
        snapshot["tables.txt"] = (tmp_path / f"out_{tag}" / "tables.txt").read_text()
        reports.append(snapshot)
    assert reports[0] == reports[1]
    print("ACCEPTANCE 9 PASS: two `run --config` executions are byte-identical "
          "apart from timings")
