import csv
import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sample
from tracseq.dataset import Dataset, EvalSet
from tracseq.errors import OracleRefusal
from tracseq.evaluation import (
    MetricReport,
    accuracy,
    auc,
    evaluate_model,
    evaluate_outputs,
    f1,
    ks_statistic,
    loo_oracle,
    mean_eval_loss,
    miss_rate,
    spearman,
    write_loo_csv,
)
from tracseq.model import ModelSpec, init_params
from tracseq.trainer import TrainConfig, train_final


def confusion_f1(preds, golds, cls):
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        if p == cls and g == cls:
            tp += 1
        elif p == cls:
            fp += 1
        elif g == cls:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def ks_enumerate(pos, neg):
    best = 0.0
    for x in sorted(set(pos) | set(neg)):
        fp = sum(v <= x for v in pos) / len(pos)
        fn = sum(v <= x for v in neg) / len(neg)
        best = max(best, abs(fp - fn))
    return best


class TestAccuracy:
    def test_values(self):
        assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
        assert accuracy([0, 0], [1, 1]) == 0.0
        assert accuracy([1] * 7 + [0] * 3, [1] * 10) == 0.7

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([1], [1, 2])


class TestF1:
    def test_formula_example(self):
        assert f1([1, 1, 0], [1, 0, 0]) == 2 / 3

    def test_perfect(self):
        assert f1([0, 1, 2], [0, 1, 2], mode="macro") == 1.0

    def test_macro_matches_confusion_oracle(self, rng):
        preds, golds = rng.integers(0, 3, 200).tolist(), rng.integers(0, 3, 200).tolist()
        expected = np.mean([confusion_f1(preds, golds, c) for c in range(3)])
        assert f1(preds, golds, mode="macro") == pytest.approx(expected, abs=1e-12)

    def test_absent_class_scores_zero(self, caplog):
        with caplog.at_level(logging.WARNING):
            value = f1([0, 1], [0, 1], mode="macro", labels=[0, 1, 2])
        assert value == pytest.approx(2 / 3)
        assert "absent" in caplog.text

    def test_binary_equals_macro_on_symmetric_case(self):
        preds, golds = [1, 0, 1, 0], [1, 0, 0, 1]
        assert f1(preds, golds, "binary", 1) == f1(preds, golds, "macro")

    def test_errors(self):
        with pytest.raises(ValueError):
            f1([1], [1, 0])
        with pytest.raises(ValueError):
            f1([1], [1], mode="micro")


class TestMiss:
    def test_example(self):
        assert miss_rate(["Yes", "no", "maybe"], ["yes", "no"]) == 1 / 3

    def test_all_parsed(self):
        assert miss_rate([" YES ", "No"], ["Yes", "No"]) == 0.0

    def test_fuzz_against_membership(self, rng):
        alphabet = list("yesnoYESNO ")
        outputs = ["".join(rng.choice(alphabet, size=rng.integers(0, 5))) for _ in range(1000)]
        lexicon = ["yes", "no"]
        brute = sum(o.strip().lower() not in lexicon for o in outputs) / len(outputs)
        assert miss_rate(outputs, lexicon) == brute

    def test_empty_lexicon(self):
        with pytest.raises(ValueError):
            miss_rate(["a"], [])

    def test_outputs_report(self):
        rep = evaluate_outputs(["Yes", "no", "maybe", "yes"], ["Yes", "Yes", "No", "yes"],
                               ["Yes", "No"])
        assert rep.miss == 0.25
        assert rep.acc == pytest.approx(2 / 3)
        assert rep.n == 4


class TestKS:
    def test_disjoint(self):
        assert ks_statistic([0.9, 0.8], [0.1, 0.2]) == 1.0

    def test_identical(self):
        assert ks_statistic([0.2, 0.5, 0.5], [0.5, 0.2, 0.5]) == 0.0

    def test_enumeration_example(self):
        pos, neg = [0.1, 0.4, 0.6], [0.2, 0.3]
        assert ks_statistic(pos, neg) == ks_enumerate(pos, neg)

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_statistic([], [1.0])

    @settings(max_examples=100, deadline=None)
    @given(pos=st.lists(st.floats(0.001, 100), min_size=1, max_size=30),
           neg=st.lists(st.floats(0.001, 100), min_size=1, max_size=30))
    def test_oracle_and_monotone_invariance(self, pos, neg):
        value = ks_statistic(pos, neg)
        assert 0.0 <= value <= 1.0
        assert value == pytest.approx(ks_enumerate(pos, neg), abs=1e-12)
        assert ks_statistic(pos, pos) == 0.0
        for f in (lambda x: 2 * x + 1, lambda x: x**3):
            fp, fn = [f(v) for v in pos], [f(v) for v in neg]
            # a strictly increasing map preserves order, so only ties introduced
            # by rounding could move the statistic
            if len(set(fp) | set(fn)) == len(set(pos) | set(neg)):
                assert ks_statistic(fp, fn) == value


class TestSpearman:
    def test_identity_and_reversal(self):
        a = [3.0, 1.0, 2.0, 5.0]
        assert spearman(a, a) == 1.0
        assert spearman(sorted(a), sorted(a)[::-1]) == -1.0

    def test_matches_direct(self, rng):
        a, b = rng.standard_normal(50), rng.standard_normal(50)
        ra, rb = np.argsort(np.argsort(a)), np.argsort(np.argsort(b))
        assert spearman(a, b) == pytest.approx(np.corrcoef(ra, rb)[0, 1], abs=1e-12)

    def test_constant_is_error(self):
        with pytest.raises(ValueError):
            spearman([1, 1, 1], [1, 2, 3])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)),
                    min_size=3, max_size=30))
    def test_monotone_invariance(self, pairs):
        a = np.array([p[0] for p in pairs], dtype=float)
        b = np.array([p[1] for p in pairs], dtype=float)
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            return
        # x**3 + 3x is strictly increasing and exact on these integers
        assert spearman(a**3 + 3 * a, b) == pytest.approx(spearman(a, b), abs=1e-12)
        assert spearman(a, 2 * b - 7) == pytest.approx(spearman(a, b), abs=1e-12)


class TestAuc:
    def test_perfect_and_chance(self):
        assert auc([3, 2, 1, 0], [True, True, False, False]) == 1.0
        assert auc([1, 1, 1, 1], [True, False, True, False]) == 0.5

    def test_pairwise_oracle(self, rng):
        scores = rng.integers(0, 5, 40).astype(float)
        labels = rng.random(40) < 0.3
        pairs = list(itertools.product(scores[labels], scores[~labels]))
        expected = sum((p > n) + 0.5 * (p == n) for p, n in pairs) / len(pairs)
        assert auc(scores, labels) == pytest.approx(expected, abs=1e-12)


class TestReports:
    def test_model_report_in_range(self, synthetic_small):
        spec = ModelSpec("logistic", 4, 2, init_scale=0.0)
        w = train_final(spec, synthetic_small, TrainConfig(epochs=10, batch_size=10, eta=0.5))
        rep = evaluate_model(spec, w, synthetic_small)
        for v in (rep.acc, rep.f1, rep.miss, rep.ks):
            assert 0.0 <= v <= 1.0
        assert rep.acc > 0.8
        assert rep.n == len(synthetic_small)

    def test_table_and_json(self):
        rep = MetricReport(0.5, 0.25, 0.0, 1.0, 4)
        assert rep.to_json() == {"acc": 0.5, "f1": 0.25, "miss": 0.0, "ks": 1.0, "n": 4}
        lines = rep.table().splitlines()
        assert lines[0].split() == ["metric", "value"]
        assert len({len(line) for line in lines}) == 1


class TestLooOracle:
    CFG = TrainConfig(epochs=40, batch_size=100, eta=0.5, checkpoint_every=100)
    SPEC = ModelSpec("logistic", 2, 2, init_scale=0.0)

    def constructed(self):
        pts = [((2.0, 0.1), 1), ((2.0, 0.1), 1), ((1.5, -0.3), 1), ((0.2, 0.05), 1),
               ((-2.0, 0.0), 0), ((-1.5, 0.4), 0), ((-1.8, -0.2), 0), ((-0.25, 0.1), 0)]
        train = Dataset([sample(f"t{i}", x, y) for i, (x, y) in enumerate(pts)], 2, 2)
        ev = EvalSet([sample("e0", (0.3, 0.0), 1), sample("e1", (-0.3, 0.0), 0)])
        return train, ev

    def test_duplicate_vs_boundary(self):
        train, ev = self.constructed()
        deltas = {r.sample_id: r.delta for r in loo_oracle(self.SPEC, train, ev, self.CFG)}
        assert abs(deltas["t0"]) < abs(deltas["t3"])
        assert abs(deltas["t0"]) < abs(deltas["t7"])

    def test_single_sample_leaves_init(self):
        train = Dataset([sample("t", (1.0, 1.0), 1)], 2, 2)
        ev = EvalSet([sample("e", (1.0, 0.5), 1)])
        (r,) = loo_oracle(self.SPEC, train, ev, self.CFG)
        trained = train_final(self.SPEC, train, self.CFG)
        assert r.loo_eval_loss == mean_eval_loss(self.SPEC, init_params(self.SPEC), ev)
        assert r.delta == mean_eval_loss(self.SPEC, init_params(self.SPEC), ev) - \
            mean_eval_loss(self.SPEC, trained, ev)

    def test_deterministic_and_ordered(self):
        train, ev = self.constructed()
        a = loo_oracle(self.SPEC, train, ev, self.CFG)
        b = loo_oracle(self.SPEC, train, ev, self.CFG, workers=3)
        assert a == b
        assert [r.sample_id for r in a] == sorted(train.ids)

    def test_refuses_above_cap(self):
        train, ev = self.constructed()
        with pytest.raises(OracleRefusal, match="cap"):
            loo_oracle(self.SPEC, train, ev, self.CFG, max_n=4)

    def test_csv(self, tmp_path):
        train, ev = self.constructed()
        path = write_loo_csv(loo_oracle(self.SPEC, train, ev, self.CFG), tmp_path / "loo.csv")
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["sample_id", "base_loss", "loo_loss", "delta"]
        assert len(rows) == 9
