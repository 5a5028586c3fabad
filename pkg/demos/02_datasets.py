"""Dataset plumbing: CSV ingestion, cleaning, robust rescaling, splitting,
and the seeded synthetic generator used for desk-scale experiments.
"""

import tempfile
from pathlib import Path

import numpy as np

from flipbench import (
    PreprocessConfig,
    generate_synthetic,
    iqr_rescale,
    load_csv,
    preprocess,
    split,
)

workdir = Path(tempfile.mkdtemp(prefix="flipbench-demo-"))

# --- ingest a raw url,label CSV -------------------------------------------
csv_path = workdir / "urls.csv"
csv_path.write_text(
    "url,label\n"
    "http://alpha.example/home,0\n"
    "http://alpha.example/home,0\n"      # exact duplicate: dropped
    "http://alpha.example/other,1\n"     # same hostname: dropped
    "https://beta.example/login,1\n"
    "http://gamma.example/?q=1,0\n",
    encoding="utf-8",
)
records = load_csv(csv_path)
print(f"loaded {len(records)} records")

ds = preprocess(records, PreprocessConfig(seed=3))
print(f"after cleaning: {ds.n} rows x {ds.dim} features "
      f"(duplicates and repeated hostnames removed, columns IQR-rescaled)")

# --- the rescaling rule on its own ----------------------------------------
col = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
print("\niqr_rescale([1..5]) =", iqr_rescale(col))   # median 3, Q3-Q1 = 2
print("iqr_rescale([5,5,5]) =", iqr_rescale([5, 5, 5]), "(zero-IQR guard)")

# --- seeded synthetic data and the 79/21 split -----------------------------
synth = generate_synthetic(1000, class_separation=6.0, seed=11)
sp = split(synth, ratio=0.79, seed=22)
print(f"\nsynthetic: {synth.n} rows, split into train={sp.train.n} / test={sp.test.n}")
print("class balance in train:",
      int((sp.train.labels == 0).sum()), "benign /",
      int((sp.train.labels == 1).sum()), "malicious")

# Same seed, same data: rerunning the generator is bit-identical.
again = generate_synthetic(1000, class_separation=6.0, seed=11)
print("regeneration bit-identical:", np.array_equal(synth.features, again.features))
