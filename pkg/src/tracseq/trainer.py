"""Minibatch SGD with step-annotated checkpoints and their on-disk format.

A run directory holds ``manifest.json`` plus one binary file per checkpoint:

    magic   b"TSEQCKPT"            8 bytes
    version uint32 little-endian   (= 1)
    count   uint64 little-endian   number of parameters
    params  float64 little-endian  count * 8 bytes
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from tracseq.dataset import Dataset
from tracseq.errors import FormatError, StorageError
from tracseq.model import ModelSpec, init_params

MAGIC = b"TSEQCKPT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQ")
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1
    batch_size: int = 32
    schedule: str = "constant"
    eta: float = 0.1
    eta_min: float = 0.0
    checkpoint_every: int = 10
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.checkpoint_every < 1:
            raise ValueError("epochs, batch_size and checkpoint_every must be >= 1")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr schedule {self.schedule!r}")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.schedule == "cosine" and not 0 < self.eta_min <= self.eta:
            raise ValueError("cosine schedule needs 0 < eta_min <= eta")

    def steps_per_epoch(self, n: int) -> int:
        return math.ceil(n / self.batch_size)

    def total_steps(self, n: int) -> int:
        return self.epochs * self.steps_per_epoch(n)

    def lr_at(self, step: int, total_steps: int) -> float:
        """Step size applied on 1-based ``step``.

        The cosine schedule starts at ``eta`` on step 1 and would reach
        ``eta_min`` one step past the end.
        """
        if self.schedule == "constant":
            return self.eta
        frac = (step - 1) / total_steps
        return self.eta_min + 0.5 * (self.eta - self.eta_min) * (1.0 + math.cos(math.pi * frac))

    def to_json(self) -> dict[str, Any]:
        lr: dict[str, Any] = {"kind": self.schedule}
        if self.schedule == "constant":
            lr["eta"] = self.eta
        else:
            lr.update(eta_max=self.eta, eta_min=self.eta_min)
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr_schedule": lr,
            "checkpoint_every": self.checkpoint_every,
            "shuffle_seed": self.shuffle_seed,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> TrainConfig:
        lr = obj.get("lr_schedule", {"kind": "constant", "eta": 0.1})
        if lr["kind"] == "constant":
            eta, eta_min = lr["eta"], 0.0
        else:
            eta, eta_min = lr["eta_max"], lr["eta_min"]
        return cls(
            epochs=obj["epochs"],
            batch_size=obj["batch_size"],
            schedule=lr["kind"],
            eta=eta,
            eta_min=eta_min,
            checkpoint_every=obj["checkpoint_every"],
            shuffle_seed=obj["shuffle_seed"],
        )


@dataclass(frozen=True)
class Checkpoint:
    index: int
    step: int
    t: int
    eta: float
    params: np.ndarray = field(repr=False)


@dataclass
class CheckpointStore:
    run_id: str
    model_spec: ModelSpec
    checkpoints: list[Checkpoint]
    final_time: int
    dataset_name: str = ""
    config: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.checkpoints)

    @property
    def final_params(self) -> np.ndarray:
        return self.checkpoints[-1].params

    def subset(self, indices) -> CheckpointStore:
        """Store restricted to some checkpoints; ``final_time`` is kept."""
        keep = set(indices)
        return CheckpointStore(
            self.run_id,
            self.model_spec,
            [c for c in self.checkpoints if c.index in keep],
            self.final_time,
            self.dataset_name,
            dict(self.config),
        )


def train(
    spec: ModelSpec,
    d: Dataset,
    cfg: TrainConfig,
    out_dir: str | Path | None = None,
    run_id: str | None = None,
    init: np.ndarray | None = None,
) -> CheckpointStore:
    """Run minibatch SGD, checkpointing every ``cfg.checkpoint_every`` steps.

    The last step is always checkpointed (once). Each checkpoint records the
    step size used on the step that produced it; its time coordinate is the
    1-based global step.
    """
    n = len(d)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if d.feature_dim != spec.feature_dim or d.num_classes != spec.num_classes:
        raise ValueError("dataset dimensions do not match the model spec")

    w, checkpoints = _sgd(spec, d, cfg, init, keep=True)
    store = CheckpointStore(
        run_id=run_id or f"{d.name}-{spec.kind}-seed{cfg.shuffle_seed}",
        model_spec=spec,
        checkpoints=checkpoints,
        final_time=cfg.total_steps(n),
        dataset_name=d.name,
        config=cfg.to_json(),
    )
    if out_dir is not None:
        save_store(store, out_dir)
    return store


def train_final(spec: ModelSpec, d: Dataset, cfg: TrainConfig) -> np.ndarray:
    """Final parameters of a run; an empty dataset leaves the initialisation."""
    if len(d) == 0:
        return init_params(spec)
    return _sgd(spec, d, cfg, None, keep=False)[0]


def _sgd(spec, d, cfg, init, keep):
    X, y = d.X, d.y
    n = len(d)
    w = init_params(spec) if init is None else np.array(init, dtype=np.float64)
    rng = np.random.default_rng(cfg.shuffle_seed)
    total = cfg.total_steps(n)
    checkpoints: list[Checkpoint] = []
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            step += 1
            eta = cfg.lr_at(step, total)
            w = w - eta * spec.mean_grad(w, X[idx], y[idx])
            if keep and (step % cfg.checkpoint_every == 0 or step == total):
                checkpoints.append(Checkpoint(len(checkpoints), step, step, eta, w.copy()))
    return w, checkpoints


# ---------------------------------------------------------------------------
# Serialisation


def encode_params(params: np.ndarray) -> bytes:
    params = np.ascontiguousarray(params, dtype="<f8")
    return _HEADER.pack(MAGIC, FORMAT_VERSION, params.shape[0]) + params.tobytes()


def decode_params(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise FormatError(
            f"{source}: truncated header, expected {_HEADER.size} bytes, got {len(blob)}"
        )
    magic, version, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{source}: unsupported format version {version}")
    expected = _HEADER.size + 8 * count
    if len(blob) != expected:
        raise FormatError(f"{source}: expected {expected} bytes, got {len(blob)}")
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(np.float64)


def checkpoint_filename(index: int) -> str:
    return f"ckpt_{index:05d}.bin"


def save_checkpoint(ckpt: Checkpoint, out_dir: str | Path) -> dict[str, Any]:
    """Write one parameter file; returns its manifest entry."""
    out_dir = Path(out_dir)
    name = checkpoint_filename(ckpt.index)
    blob = encode_params(ckpt.params)
    try:
        (out_dir / name).write_bytes(blob)
    except OSError as exc:
        raise StorageError(f"cannot write {out_dir / name}: {exc}") from exc
    return {
        "i": ckpt.index,
        "step": ckpt.step,
        "t_i": ckpt.t,
        "eta_i": ckpt.eta,
        "file": name,
        "sha256": hashlib.sha256(blob).hexdigest(),
    }


def save_store(store: CheckpointStore, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {out_dir}: {exc}") from exc
    entries = [save_checkpoint(c, out_dir) for c in store.checkpoints]
    manifest = {
        "format_version": FORMAT_VERSION,
        "run_id": store.run_id,
        "model_spec": store.model_spec.to_json(),
        "dataset": store.dataset_name,
        "config": store.config,
        "final_time": store.final_time,
        "checkpoints": entries,
    }
    path = out_dir / MANIFEST
    try:
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    return path


def load_store(run_dir: str | Path) -> CheckpointStore:
    run_dir = Path(run_dir)
    mpath = run_dir / MANIFEST
    if not mpath.exists():
        raise FileNotFoundError(f"no {MANIFEST} in {run_dir}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{mpath}: malformed JSON ({exc.msg})") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{mpath}: unsupported format version {manifest.get('format_version')}")
    spec = ModelSpec.from_json(manifest["model_spec"])
    checkpoints = []
    for entry in manifest["checkpoints"]:
        fpath = run_dir / entry["file"]
        blob = fpath.read_bytes()
        params = decode_params(blob, str(fpath))
        if "sha256" in entry and hashlib.sha256(blob).hexdigest() != entry["sha256"]:
            raise FormatError(f"{fpath}: SHA-256 does not match manifest")
        if params.shape[0] != spec.num_params:
            raise FormatError(
                f"{fpath}: holds {params.shape[0]} parameters, model needs {spec.num_params}"
            )
        checkpoints.append(
            Checkpoint(int(entry["i"]), int(entry["step"]), int(entry["t_i"]),
                       float(entry["eta_i"]), params)
        )
    return CheckpointStore(
        run_id=manifest["run_id"],
        model_spec=spec,
        checkpoints=checkpoints,
        final_time=int(manifest["final_time"]),
        dataset_name=manifest.get("dataset", ""),
        config=manifest.get("config", {}),
    )
