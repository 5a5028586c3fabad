"""Detect and undo label flips with the K-NN sanitization defense.

The defense re-predicts every label of an untrusted dataset from its K
nearest neighbors in a trusted reference, alarms on each mismatch, and
restores the predicted label.  K itself is chosen first: the smallest odd
candidate whose predictions reproduce the reference labels exactly.
"""

import numpy as np

from flipbench import (
    ForestParams,
    KSearchConfig,
    accuracy,
    choose_k,
    flip_labels,
    generate_synthetic,
    sanitize,
    split,
    train_forest,
)

ds = generate_synthetic(1000, class_separation=6.0, seed=11)
sp = split(ds, 0.79, seed=22)
params = ForestParams(seed=33)

# Step 1: pick K on the clean reference.  exclude_self=True makes the
# search meaningful; with self-matches allowed K=1 always wins trivially.
k = choose_k(sp.train, sp.train, KSearchConfig(exclude_self=True))
print(f"chosen K = {k}")

# Step 2: sanitize each poisoned training set and retrain.
print(f"\n{'rate':>6} {'flips':>6} {'alarms':>7} {'true':>5} {'false':>6} "
      f"{'recovered acc':>14}")
for rate in (0.02, 0.03, 0.04, 0.05):
    attack = flip_labels(sp.train, rate, seed=44)
    defense = sanitize(sp.train, attack.poisoned, k, exclude_self=True)
    flipped = set(attack.flipped_indices.tolist())
    alarmed = {a.index for a in defense.alarms}
    model = train_forest(defense.recovered, params)
    print(f"{rate:>6.0%} {attack.count:>6} {len(alarmed):>7} "
          f"{len(alarmed & flipped):>5} {len(alarmed - flipped):>6} "
          f"{accuracy(model, defense.recovered):>14.2%}")

# A couple of alarms, spelled out.
attack = flip_labels(sp.train, 0.02, seed=44)
defense = sanitize(sp.train, attack.poisoned, k, exclude_self=True)
for alarm in defense.alarms[:3]:
    print(f"LF attack suspected at row {alarm.index}: "
          f"label {alarm.old_label} restored to {alarm.predicted_label}")

# The self-match baseline: with the reference containing the true labels
# and exclude_self off, K=1 recovery is exact by construction.
baseline = sanitize(sp.train, attack.poisoned, 1, exclude_self=False)
print("\nself-match K=1 recovery exact:",
      bool(np.array_equal(baseline.recovered.labels, sp.train.labels)))
