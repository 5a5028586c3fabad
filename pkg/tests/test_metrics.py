import math

import numpy as np
import pytest

from flipbench.errors import EmptyMatrixError, LabelError, LengthError
from flipbench.metrics import ConfusionMatrix, confusion, rates


class TestConfusion:
    def test_perfect(self):
        cm = confusion([1, 1, 0, 0], [1, 1, 0, 0])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 2, 0, 0)

    def test_all_false_positive(self):
        cm = confusion([1, 1], [0, 0])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (0, 0, 2, 0)

    def test_mixed(self):
        cm = confusion([1, 0, 1, 0], [1, 1, 0, 0])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (1, 1, 1, 1)

    def test_length_errors(self):
        with pytest.raises(LengthError):
            confusion([1], [1, 0])
        with pytest.raises(LengthError):
            confusion([], [])

    def test_nonbinary_rejected(self):
        with pytest.raises(LabelError):
            confusion([1, 2], [0, 0])

    def test_total_matches_sample_count(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 60))
            p, t = rng.integers(0, 2, n), rng.integers(0, 2, n)
            assert confusion(p, t).total == n


class TestRates:
    def test_perfect(self):
        r = rates(ConfusionMatrix(tp=5, tn=5, fp=0, fn=0))
        assert r.accuracy == 1.0 and r.tpr == 1.0 and r.tnr == 1.0
        assert r.fpr == 0.0 and r.fnr == 0.0

    def test_symmetric_half(self):
        r = rates(ConfusionMatrix(tp=1, tn=1, fp=1, fn=1))
        assert r.tpr == r.tnr == r.fpr == r.fnr == r.accuracy == 0.5

    def test_derived_accuracy(self):
        r = rates(ConfusionMatrix(tp=90, tn=88, fp=12, fn=10))
        assert r.accuracy == pytest.approx(178 / 200)

    def test_zero_denominator_is_nan_not_error(self):
        r = rates(ConfusionMatrix(tp=0, tn=3, fp=0, fn=0))  # no positives anywhere
        assert math.isnan(r.tpr) and math.isnan(r.fnr)
        assert r.tnr == 1.0 and r.accuracy == 1.0
        assert r.to_dict()["tpr"] is None

    def test_empty_matrix_error(self):
        with pytest.raises(EmptyMatrixError):
            rates(ConfusionMatrix(tp=0, tn=0, fp=0, fn=0))

    def test_complement_identities(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            tp, tn, fp, fn = (int(v) for v in rng.integers(1, 200, size=4))
            r = rates(ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn))
            # float rounding keeps each sum within a couple of ulps of 1
            assert abs(r.tpr + r.fnr - 1.0) <= 1e-12
            assert abs(r.tnr + r.fpr - 1.0) <= 1e-12

    def test_swapping_predictions_and_truth_transposes_errors(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 50))
            p, t = rng.integers(0, 2, n), rng.integers(0, 2, n)
            a, b = confusion(p, t), confusion(t, p)
            assert (a.fp, a.fn) == (b.fn, b.fp)
            assert (a.tp, a.tn) == (b.tp, b.tn)
            assert rates(a).accuracy == rates(b).accuracy

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        p, t = rng.integers(0, 2, 40), rng.integers(0, 2, 40)
        perm = rng.permutation(40)
        a, b = confusion(p, t), confusion(p[perm], t[perm])
        assert (a.tp, a.tn, a.fp, a.fn) == (b.tp, b.tn, b.fp, b.fn)
