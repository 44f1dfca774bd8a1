"""Desk-scale experiments on synthetic behaviour data.

* ``loo_agreement`` - rank agreement between TracSeq scores and retraining.
* ``noisy_label_auc`` - self-influence as a detector of flipped labels.
* ``pruning_experiment`` - models trained on high-, random- and
  low-influence subsets, compared by held-out KS.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from tracseq.dataset import Dataset, EvalSet, clean_label, make_synthetic
from tracseq.evaluation import auc, evaluate_model, loo_oracle, spearman
from tracseq.influence import DecayConfig, score_dataset, self_influence_dataset
from tracseq.model import ModelSpec
from tracseq.pruner import select_topk
from tracseq.trainer import TrainConfig, train, train_final


def partition(d: Dataset, sizes: list[int], seed: int) -> list[Dataset]:
    """Consecutive slices of a seeded permutation of ``d``."""
    if sum(sizes) > len(d):
        raise ValueError(f"requested {sum(sizes)} samples from a dataset of {len(d)}")
    perm = np.random.default_rng(seed).permutation(len(d))
    out, pos = [], 0
    for k in sizes:
        out.append(d.subset([d.ids[i] for i in perm[pos : pos + k]]))
        pos += k
    return out


def with_clean_labels(d: Dataset) -> Dataset:
    samples = [dataclasses.replace(s, label=clean_label(s), flipped=False) for s in d.samples]
    return Dataset(samples, d.num_classes, d.feature_dim, d.name, dict(d.meta))


def _synthetic(n: int, feature_dim: int, noise_rate: float, seed: int, steps_per_user: int = 4):
    n_users = -(-n // steps_per_user)
    return make_synthetic(
        n_users=n_users, steps_per_user=steps_per_user, feature_dim=feature_dim,
        noise_rate=noise_rate, seed=seed,
    )


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LooSetup:
    n_train: int = 64
    n_eval: int = 64
    feature_dim: int = 4
    noise_rate: float = 0.1
    epochs: int = 50
    eta: float = 0.5


@dataclass
class LooAgreement:
    seed: int
    rho: float
    ids: list[str]
    scores: np.ndarray
    deltas: np.ndarray


def loo_agreement(seed: int, setup: LooSetup = LooSetup()) -> LooAgreement:
    """Spearman correlation of final-checkpoint TracSeq (gamma = 1) with LOO deltas.

    Training is full-batch so that removing one sample changes nothing but
    that sample's contribution.
    """
    d = _synthetic(setup.n_train + setup.n_eval, setup.feature_dim, setup.noise_rate, seed)
    tr, ev = partition(d, [setup.n_train, setup.n_eval], seed)
    spec = ModelSpec("logistic", setup.feature_dim, 2, init_seed=seed, init_scale=0.0)
    cfg = TrainConfig(epochs=setup.epochs, batch_size=setup.n_train, eta=setup.eta,
                      checkpoint_every=setup.epochs, shuffle_seed=seed)
    store = train(spec, tr, cfg)
    final = store.subset([store.checkpoints[-1].index])
    eval_set = EvalSet(ev.samples)
    records = score_dataset(final, spec, tr, eval_set, DecayConfig(gamma=1.0))
    deltas = {r.sample_id: r.delta for r in loo_oracle(spec, tr, eval_set, cfg)}
    ids = [r.sample_id for r in records]
    scores = np.array([r.score for r in records])
    delta_arr = np.array([deltas[i] for i in ids])
    return LooAgreement(seed, spearman(scores, delta_arr), ids, scores, delta_arr)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoisySetup:
    n: int = 200
    feature_dim: int = 4
    noise_rate: float = 0.1
    gamma: float = 0.9
    train: TrainConfig = TrainConfig(epochs=20, batch_size=20, eta=0.5, checkpoint_every=10)


def noisy_label_auc(seed: int, setup: NoisySetup = NoisySetup()) -> float:
    """AUC of self-influence for separating flipped from clean samples."""
    d = make_synthetic(n_users=setup.n // 5, steps_per_user=5, feature_dim=setup.feature_dim,
                       noise_rate=setup.noise_rate, seed=seed)
    spec = ModelSpec("logistic", setup.feature_dim, 2, init_seed=seed, init_scale=0.0)
    cfg = dataclasses.replace(setup.train, shuffle_seed=seed)
    store = train(spec, d, cfg)
    si = self_influence_dataset(store, spec, d, DecayConfig(gamma=setup.gamma))
    return auc(si, [bool(s.flipped) for s in d.samples])


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PruningSetup:
    """Configuration of the high- vs low-influence pruning comparison.

    The agent model that produces the scores is a short full-batch run
    checkpointed at every step; the validation set it is scored against
    carries clean labels. Final models are trained with ``final``.
    """

    feature_dim: int = 20
    n_train: int = 300
    n_val: int = 500
    n_test: int = 1000
    noise_rate: float = 0.15
    gamma: float = 0.9
    scoring: TrainConfig = TrainConfig(epochs=5, batch_size=300, eta=0.1, checkpoint_every=1)
    final: TrainConfig = TrainConfig(epochs=20, batch_size=30, eta=0.5, checkpoint_every=10)
    fractions: tuple[float, ...] = (0.5,)


@dataclass(frozen=True)
class PruningRow:
    seed: int
    fraction: float
    strategy: str
    n: int
    n_flipped: int
    ks: float
    acc: float


STRATEGIES = ("top", "random", "bottom")


def pruning_experiment(seed: int, setup: PruningSetup = PruningSetup()) -> list[PruningRow]:
    """KS/accuracy on clean held-out labels for each strategy and kept fraction.

    A ``full`` row (every training sample) is included as the reference.
    """
    steps = 6
    n_total = setup.n_train + setup.n_val + setup.n_test
    d = _synthetic(n_total, setup.feature_dim, setup.noise_rate, seed, steps_per_user=steps)
    tr, va, te = partition(d, [setup.n_train, setup.n_val, setup.n_test], seed)
    spec = ModelSpec("logistic", setup.feature_dim, 2, init_seed=seed, init_scale=0.0)
    scoring_cfg = dataclasses.replace(setup.scoring, shuffle_seed=seed)
    final_cfg = dataclasses.replace(setup.final, shuffle_seed=seed)

    store = train(spec, tr, scoring_cfg)
    records = score_dataset(store, spec, tr, EvalSet(with_clean_labels(va).samples),
                            DecayConfig(gamma=setup.gamma))
    order = select_topk(records, len(records))
    test_labels = np.array([clean_label(s) for s in te.samples])
    rng = np.random.default_rng([seed, 1])
    random_order = [tr.ids[i] for i in rng.permutation(len(tr))]

    def row(fraction, strategy, ids):
        sub = tr.subset(ids)
        w = train_final(spec, sub, final_cfg)
        rep = evaluate_model(spec, w, te, labels=test_labels)
        return PruningRow(seed, fraction, strategy, len(sub), len(sub.flipped_ids), rep.ks, rep.acc)

    rows = []
    for fraction in setup.fractions:
        k = max(1, round(fraction * len(tr)))
        picks = {"top": order[:k], "random": random_order[:k], "bottom": order[-k:]}
        rows.extend(row(fraction, s, picks[s]) for s in STRATEGIES)
    rows.append(row(1.0, "full", tr.ids))
    return rows
