"""Poison the training split with random label flips at 2-5% and watch the
forest degrade.

Training accuracy here is measured against the poisoned labels, so on
well-separated data it tracks 1 - rate: the flipped rows are exactly the
rows the retrained forest refuses to fit.  The attack success rate (asr)
is accuracy against fully complemented test labels, which for binary
labels is identically 1 - clean test accuracy.
"""

from flipbench import (
    ForestParams,
    accuracy,
    asr,
    flip_labels,
    generate_synthetic,
    split,
    train_forest,
)

ds = generate_synthetic(1000, class_separation=6.0, seed=11)
sp = split(ds, 0.79, seed=22)
params = ForestParams(seed=33)

baseline = train_forest(sp.train, params)
print(f"clean baseline: train {accuracy(baseline, sp.train):.2%}, "
      f"test {accuracy(baseline, sp.test):.2%}")

print(f"\n{'rate':>6} {'flips':>6} {'train acc':>10} {'test acc':>9} {'asr':>7}")
for rate in (0.02, 0.03, 0.04, 0.05):
    result = flip_labels(sp.train, rate, seed=44)
    poisoned_model = train_forest(result.poisoned, params)
    tr = accuracy(poisoned_model, result.poisoned)  # vs the labels it saw
    te = accuracy(poisoned_model, sp.test)          # vs clean truth
    a = asr(poisoned_model, sp.test)
    print(f"{rate:>6.0%} {result.count:>6} {tr:>10.2%} {te:>9.2%} {a:>7.2%}")

print("\nasr + clean test accuracy == 1 holds by construction; a strong")
print("model keeps asr near zero even while the poisoned training accuracy")
print("falls by roughly the poison rate.")

# The attack is an involution: the same seed flips the same rows back.
once = flip_labels(sp.train, 0.05, seed=44)
twice = flip_labels(once.poisoned, 0.05, seed=44)
print("flip twice with one seed restores the labels:",
      bool((twice.poisoned.labels == sp.train.labels).all()))
