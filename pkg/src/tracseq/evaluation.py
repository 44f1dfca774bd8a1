"""Classification metrics, the KS statistic, and the leave-one-out oracle."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from tracseq.dataset import Dataset, EvalSet
from tracseq.errors import OracleRefusal
from tracseq.model import ModelSpec
from tracseq.trainer import TrainConfig, train_final

log = logging.getLogger(__name__)

LOO_DEFAULT_CAP = 256


def _pair(preds, golds):
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} labels")
    return preds, golds


def accuracy(preds: Sequence, golds: Sequence) -> float:
    preds, golds = _pair(preds, golds)
    if not preds:
        raise ValueError("accuracy needs at least one prediction")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


def _binary_f1(preds, golds, pos) -> float:
    tp = sum(p == pos and g == pos for p, g in zip(preds, golds))
    fp = sum(p == pos and g != pos for p, g in zip(preds, golds))
    fn = sum(p != pos and g == pos for p, g in zip(preds, golds))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def f1(
    preds: Sequence,
    golds: Sequence,
    mode: str = "binary",
    pos_class=1,
    labels: Iterable | None = None,
) -> float:
    """Binary F1 on ``pos_class`` or the unweighted macro mean over ``labels``.

    In macro mode a label absent from both vectors scores 0 and is logged.
    """
    preds, golds = _pair(preds, golds)
    if mode == "binary":
        return _binary_f1(preds, golds, pos_class)
    if mode != "macro":
        raise ValueError(f"unknown f1 mode {mode!r}")
    classes = sorted(set(labels) if labels is not None else set(preds) | set(golds))
    if not classes:
        return 0.0
    present = set(preds) | set(golds)
    absent = [c for c in classes if c not in present]
    if absent:
        log.warning("classes %s absent from predictions and labels; scored as 0", absent)
    return float(np.mean([_binary_f1(preds, golds, c) for c in classes]))


def normalise_output(text: str) -> str:
    return text.strip().casefold()


def parse_outputs(raw_outputs: Sequence[str], lexicon: Iterable[str]) -> list[str | None]:
    """Canonical lexicon entry matched by each output, or ``None`` for a miss."""
    table = {normalise_output(w): w for w in lexicon}
    if not table:
        raise ValueError("lexicon is empty")
    return [table.get(normalise_output(o)) for o in raw_outputs]


def miss_rate(raw_outputs: Sequence[str], lexicon: Iterable[str]) -> float:
    parsed = parse_outputs(raw_outputs, lexicon)
    if not parsed:
        return 0.0
    return sum(p is None for p in parsed) / len(parsed)


def ks_statistic(scores_pos: Sequence[float], scores_neg: Sequence[float]) -> float:
    """Largest gap between the two empirical CDFs, evaluated at every observed score."""
    pos = np.sort(np.asarray(scores_pos, dtype=np.float64))
    neg = np.sort(np.asarray(scores_neg, dtype=np.float64))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("ks_statistic needs two nonempty samples")
    grid = np.union1d(pos, neg)
    cdf_pos = np.searchsorted(pos, grid, side="right") / pos.size
    cdf_neg = np.searchsorted(neg, grid, side="right") / neg.size
    return float(np.max(np.abs(cdf_pos - cdf_neg)))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("spearman needs two equal-length vectors of length >= 2")
    ra, rb = rankdata(a) - (a.size + 1) / 2, rankdata(b) - (b.size + 1) / 2
    denom = np.sqrt(np.dot(ra, ra) * np.dot(rb, rb))
    if denom == 0:
        raise ValueError("spearman is undefined for a constant vector")
    return float(np.clip(np.dot(ra, rb) / denom, -1.0, 1.0))


def auc(scores: Sequence[float], positives: Sequence[bool]) -> float:
    """Probability a positive outranks a negative, ties counting half."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos, n_neg = positives.sum(), (~positives).sum()
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both positive and negative examples")
    ranks = rankdata(scores)
    return float((ranks[positives].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class MetricReport:
    acc: float
    f1: float
    miss: float
    ks: float
    n: int

    def to_json(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [("metric", "value"), *((k, f"{v:.6f}") for k, v in
                (("acc", self.acc), ("f1", self.f1), ("miss", self.miss), ("ks", self.ks))),
                ("n", str(self.n))]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{k:<{width}}  {v:>10}" for k, v in rows) + "\n"


def default_f1_mode(num_classes: int) -> str:
    return "binary" if num_classes == 2 else "macro"


def evaluate_model(
    spec: ModelSpec,
    params: np.ndarray,
    d: Dataset,
    f1_mode: str | None = None,
    pos_class: int = 1,
    labels: np.ndarray | None = None,
) -> MetricReport:
    """Metrics of a trained classifier; KS uses the positive-class probability."""
    if len(d) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    golds = d.y if labels is None else np.asarray(labels)
    proba = spec.predict_proba(params, d.X)
    preds = proba.argmax(axis=1)
    mode = f1_mode or default_f1_mode(spec.num_classes)
    score = proba[:, pos_class]
    is_pos = golds == pos_class
    ks = ks_statistic(score[is_pos], score[~is_pos]) if is_pos.any() and (~is_pos).any() else 0.0
    return MetricReport(
        acc=accuracy(preds.tolist(), golds.tolist()),
        f1=f1(preds.tolist(), golds.tolist(), mode, pos_class, range(spec.num_classes)),
        miss=0.0,
        ks=ks,
        n=len(d),
    )


def evaluate_outputs(
    raw_outputs: Sequence[str],
    golds: Sequence[str],
    lexicon: Sequence[str],
    f1_mode: str | None = None,
    pos_label: str | None = None,
) -> MetricReport:
    """Metrics of free-text model outputs against gold label strings.

    Outputs matching no lexicon entry count towards ``miss`` and are left out
    of acc and F1. KS is not defined for hard labels and is reported as 0.
    """
    raw_outputs, golds = _pair(raw_outputs, golds)
    if not raw_outputs:
        raise ValueError("no outputs to evaluate")
    parsed = parse_outputs(raw_outputs, lexicon)
    canon = parse_outputs(golds, lexicon)
    kept = [(p, g) for p, g in zip(parsed, canon) if p is not None]
    miss = 1.0 - len(kept) / len(parsed)
    mode = f1_mode or default_f1_mode(len(lexicon))
    if kept:
        preds, gold = zip(*kept)
        acc = accuracy(preds, gold)
        pos = pos_label if pos_label is not None else lexicon[0]
        f1v = f1(preds, gold, mode, pos, lexicon)
    else:
        acc = f1v = 0.0
    return MetricReport(acc=acc, f1=f1v, miss=miss, ks=0.0, n=len(raw_outputs))


# ---------------------------------------------------------------------------
# Leave-one-out oracle


@dataclass(frozen=True)
class LooResult:
    sample_id: str
    base_eval_loss: float
    loo_eval_loss: float

    @property
    def delta(self) -> float:
        return self.loo_eval_loss - self.base_eval_loss


def mean_eval_loss(spec: ModelSpec, params: np.ndarray, eval_set: EvalSet | Dataset) -> float:
    X = np.array([s.features for s in eval_set.samples], dtype=np.float64)
    y = np.array([s.label for s in eval_set.samples], dtype=np.int64)
    return float(spec.losses(params, X, y).mean())


def loo_oracle(
    spec: ModelSpec,
    train: Dataset,
    eval_set: EvalSet | Dataset,
    cfg: TrainConfig,
    max_n: int = LOO_DEFAULT_CAP,
    workers: int = 1,
) -> list[LooResult]:
    """Retrain once per training sample with that sample removed.

    Every run shares the initialisation and shuffle seed of the base run.
    Results come back in sample-id order.
    """
    if len(train) > max_n:
        raise OracleRefusal(
            f"leave-one-out needs {len(train) + 1} retrainings for n={len(train)}, "
            f"above the cap of {max_n}; raise max_n to run it anyway"
        )
    if len(eval_set.samples) == 0:
        raise ValueError("eval set is empty")
    base = mean_eval_loss(spec, train_final(spec, train, cfg), eval_set)
    ids = sorted(train.ids)

    def one(sample_id: str) -> LooResult:
        w = train_final(spec, train.without(sample_id), cfg)
        return LooResult(sample_id, base, mean_eval_loss(spec, w, eval_set))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, ids))
    return [one(i) for i in ids]


def write_loo_csv(results: Sequence[LooResult], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "base_loss", "loo_loss", "delta"])
        for r in results:
            writer.writerow([r.sample_id, repr(r.base_eval_loss), repr(r.loo_eval_loss), repr(r.delta)])
    return path


def write_report(report: MetricReport, json_path: str | Path, table_path: str | Path | None = None):
    Path(json_path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    if table_path is not None:
        Path(table_path).write_text(report.table(), encoding="utf-8")
