"""Time-decayed checkpoint influence (TracSeq) and its undecayed TracInCP case.

For a training sample ``z`` and a test sample ``z'`` the score is

    sum_i  gamma ** (T - t_i) * eta_i * <grad l(w_i, z), grad l(w_i, z')>

over the stored checkpoints ``w_i``, summed in ascending checkpoint order.

Any object exposing ``sample_grads(params, samples) -> (n, P) array`` can
stand in for the model; :class:`tracseq.model.ModelSpec` is the usual one.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from tracseq.dataset import Dataset, EvalSet, Sample
from tracseq.errors import ConfigurationError, ParseError
from tracseq.trainer import CheckpointStore

log = logging.getLogger(__name__)

TIME_AXES = ("checkpoint_step", "sample_timestamp")
CHUNK_SIZE = 32


class GradientModel(Protocol):
    def sample_grads(self, params: np.ndarray, samples: Sequence[Sample]) -> np.ndarray: ...


@dataclass(frozen=True)
class DecayConfig:
    """Decay settings.

    ``reference_time`` overrides the default T, which is the store's final
    step on the ``checkpoint_step`` axis and the eval set's reference time
    (or the test sample's own ``t``) on the ``sample_timestamp`` axis.
    Negative exponents are clamped to zero unless ``strict`` is set.
    """

    gamma: float = 0.9
    time_axis: str = "checkpoint_step"
    reference_time: int | None = None
    strict: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.time_axis not in TIME_AXES:
            raise ConfigurationError(f"time_axis must be one of {TIME_AXES}")


TRACINCP = DecayConfig(gamma=1.0)


@dataclass
class InfluenceRecord:
    sample_id: str
    score: float
    # (checkpoint index, decay weight, mean dot product, contribution)
    per_checkpoint: list[tuple[int, float, float, float]] = field(default_factory=list)
    n_eval: int = 1


def reference_time(store: CheckpointStore, cfg: DecayConfig, sample_time: int | None) -> int:
    if cfg.reference_time is not None:
        return cfg.reference_time
    if cfg.time_axis == "checkpoint_step":
        return store.final_time
    if sample_time is None:
        raise ConfigurationError("sample_timestamp axis needs a reference time")
    return sample_time


def decay_weight(cfg: DecayConfig, T: int, t: int) -> float:
    exponent = T - t
    if exponent < 0:
        if cfg.strict:
            raise ConfigurationError(f"reference time {T} precedes checkpoint time {t}")
        exponent = 0
    return cfg.gamma**exponent


def decay_weights(store: CheckpointStore, cfg: DecayConfig, T: int) -> list[float]:
    return [decay_weight(cfg, T, c.t) for c in store.checkpoints]


def _check_store(store: CheckpointStore) -> None:
    if not store.checkpoints:
        raise ValueError("checkpoint store is empty")


def tracseq_terms(
    store: CheckpointStore,
    model: GradientModel,
    z_t: Sample,
    z_T: Sample,
    cfg: DecayConfig,
) -> list[tuple[int, float, float, float]]:
    """Per-checkpoint ``(index, weight, dot, contribution)`` for one pair."""
    _check_store(store)
    T = reference_time(store, cfg, z_T.t)
    terms = []
    for c, weight in zip(store.checkpoints, decay_weights(store, cfg, T)):
        ga = model.sample_grads(c.params, [z_t])[0]
        gb = model.sample_grads(c.params, [z_T])[0]
        dot = float(np.dot(ga, gb))
        terms.append((c.index, weight, dot, weight * c.eta * dot))
    return terms


def tracseq_pair(
    store: CheckpointStore,
    model: GradientModel,
    z_t: Sample,
    z_T: Sample,
    cfg: DecayConfig,
) -> float:
    total = 0.0
    for *_, contribution in tracseq_terms(store, model, z_t, z_T, cfg):
        total += contribution
    return total


def tracincp_pair(store: CheckpointStore, model: GradientModel, z_t: Sample, z_T: Sample) -> float:
    return tracseq_pair(store, model, z_t, z_T, TRACINCP)


def self_influence(store: CheckpointStore, model: GradientModel, z: Sample, cfg: DecayConfig) -> float:
    return tracseq_pair(store, model, z, z, cfg)


def self_influence_dataset(
    store: CheckpointStore, model: GradientModel, d: Dataset, cfg: DecayConfig
) -> np.ndarray:
    """Vectorised self-influence of every sample, in dataset order.

    On the ``sample_timestamp`` axis each sample is its own reference time
    unless ``cfg.reference_time`` is set.
    """
    _check_store(store)
    out = np.zeros(len(d))
    per_sample_T = cfg.time_axis == "sample_timestamp" and cfg.reference_time is None
    T = None if per_sample_T else reference_time(store, cfg, None)
    for c in store.checkpoints:
        g = model.sample_grads(c.params, d.samples)
        sq = np.einsum("ij,ij->i", g, g)
        if per_sample_T:
            w = np.array([decay_weight(cfg, s.t, c.t) for s in d.samples])
        else:
            w = decay_weight(cfg, T, c.t)
        out += w * c.eta * sq
    return out


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("TRACSEQ_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def score_dataset(
    store: CheckpointStore,
    model: GradientModel,
    train: Dataset,
    eval_set: EvalSet,
    cfg: DecayConfig,
    threads: int | None = None,
) -> list[InfluenceRecord]:
    """Mean TracSeq score of every training sample against an eval set.

    Eval gradients are computed once per checkpoint. Training samples are
    processed in fixed-size chunks, so the result does not depend on the
    number of worker threads.
    """
    _check_store(store)
    if len(eval_set) == 0:
        raise ValueError("eval set is empty")
    evals = sorted(eval_set.samples, key=lambda s: s.id)
    if cfg.reference_time is not None:
        T = cfg.reference_time
    elif cfg.time_axis == "checkpoint_step":
        T = store.final_time
    else:
        T = eval_set.reference_time
    weights = decay_weights(store, cfg, T)
    eval_grads = [model.sample_grads(c.params, evals) for c in store.checkpoints]
    m = len(evals)

    def unit(chunk: Sequence[Sample]) -> np.ndarray:
        dots = np.empty((len(chunk), len(store.checkpoints)))
        for ci, c in enumerate(store.checkpoints):
            g = model.sample_grads(c.params, chunk)
            dots[:, ci] = (g @ eval_grads[ci].T).sum(axis=1) / m
        return dots

    samples = train.samples
    chunks = [samples[i : i + CHUNK_SIZE] for i in range(0, len(samples), CHUNK_SIZE)]
    n_threads = min(resolve_threads(threads), max(1, len(chunks)))
    if n_threads == 1:
        parts = [unit(ch) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(unit, chunks))
    log.debug("scored %d samples over %d checkpoints with %d threads",
              len(samples), len(store.checkpoints), n_threads)

    records = []
    mean_dots = np.concatenate(parts, axis=0) if parts else np.zeros((0, len(store.checkpoints)))
    for s, row in zip(samples, mean_dots):
        breakdown, score = [], 0.0
        for c, weight, dot in zip(store.checkpoints, weights, row):
            contribution = weight * c.eta * float(dot)
            score += contribution
            breakdown.append((c.index, weight, float(dot), contribution))
        records.append(InfluenceRecord(s.id, score, breakdown, m))
    return records


# ---------------------------------------------------------------------------
# Output files


def ranked(records: Sequence[InfluenceRecord]) -> list[InfluenceRecord]:
    return sorted(records, key=lambda r: (-r.score, r.sample_id))


def write_scores_csv(records: Sequence[InfluenceRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "score"])
        for r in ranked(records):
            writer.writerow([r.sample_id, repr(r.score)])
    return path


def read_scores_csv(path: str | Path) -> list[InfluenceRecord]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "score"]:
            raise ParseError(f"{path}: expected header sample_id,score", 1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(InfluenceRecord(row[0], float(row[1])))
            except (IndexError, ValueError):
                raise ParseError(f"{path}: bad score row {row!r}", lineno) from None
    return out


def write_breakdown_jsonl(records: Sequence[InfluenceRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "sample_id": r.sample_id,
                "score": r.score,
                "n_eval": r.n_eval,
                "per_checkpoint": [
                    {"i": i, "weight": w, "dot": d, "contribution": c}
                    for i, w, d, c in r.per_checkpoint
                ],
            }
            fh.write(json.dumps(obj) + "\n")
    return path
