"""Time-decayed checkpoint influence scoring, Top-K pruning and credit-risk evaluation."""

from tracseq.dataset import Dataset, EvalSet, Sample, load_jsonl, make_synthetic, save_jsonl
from tracseq.influence import (
    DecayConfig,
    InfluenceRecord,
    score_dataset,
    self_influence,
    tracincp_pair,
    tracseq_pair,
)
from tracseq.model import ModelSpec, grad, grad_check, init_params, loss, predict
from tracseq.trainer import Checkpoint, CheckpointStore, TrainConfig, load_store, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointStore",
    "Dataset",
    "DecayConfig",
    "EvalSet",
    "InfluenceRecord",
    "ModelSpec",
    "Sample",
    "TrainConfig",
    "grad",
    "grad_check",
    "init_params",
    "load_jsonl",
    "load_store",
    "loss",
    "make_synthetic",
    "predict",
    "save_jsonl",
    "score_dataset",
    "self_influence",
    "tracincp_pair",
    "tracseq_pair",
    "train",
]
