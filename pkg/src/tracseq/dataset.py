"""Sample records, the JSONL sample format, and the synthetic behaviour generator."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from tracseq.errors import IntegrityError, ParseError, SchemaError

TEXT_SLOTS = ("sentence", "question", "answer", "context")


@dataclass(frozen=True)
class Sample:
    """One behaviour record of a user at an integer time coordinate."""

    id: str
    user_id: str
    t: int
    features: tuple[float, ...]
    label: int
    text_fields: dict[str, str] | None = None
    flipped: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(float(v) for v in self.features))
        if not all(math.isfinite(v) for v in self.features):
            raise SchemaError(f"sample {self.id!r} has non-finite features")
        if self.label < 0:
            raise SchemaError(f"sample {self.id!r} has negative label {self.label}")

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.features, dtype=np.float64)

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "id": self.id,
            "user_id": self.user_id,
            "t": self.t,
            "features": list(self.features),
            "label": self.label,
        }
        if self.text_fields is not None:
            obj["text_fields"] = dict(self.text_fields)
        if self.flipped is not None:
            obj["flipped"] = self.flipped
        return obj

    @classmethod
    def from_json(cls, obj: Any) -> Sample:
        if not isinstance(obj, dict):
            raise SchemaError("record is not a JSON object")
        missing = [k for k in ("id", "user_id", "t", "features", "label") if k not in obj]
        if missing:
            raise SchemaError(f"record missing fields {missing}")
        if not isinstance(obj["t"], int) or isinstance(obj["t"], bool):
            raise SchemaError("t must be an integer")
        if not isinstance(obj["label"], int) or isinstance(obj["label"], bool):
            raise SchemaError("label must be an integer")
        feats = obj["features"]
        if not isinstance(feats, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in feats
        ):
            raise SchemaError("features must be a list of numbers")
        text = obj.get("text_fields")
        if text is not None and not (
            isinstance(text, dict) and all(isinstance(v, str) for v in text.values())
        ):
            raise SchemaError("text_fields must map slot names to strings")
        flipped = obj.get("flipped")
        if flipped is not None and not isinstance(flipped, bool):
            raise SchemaError("flipped must be a boolean")
        return cls(
            id=str(obj["id"]),
            user_id=str(obj["user_id"]),
            t=obj["t"],
            features=feats,
            label=obj["label"],
            text_fields=text,
            flipped=flipped,
        )


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    num_classes: int
    feature_dim: int
    name: str = "dataset"
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.num_classes < 2:
            raise SchemaError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.feature_dim < 1:
            raise SchemaError(f"feature_dim must be >= 1, got {self.feature_dim}")
        seen: set[str] = set()
        for s in self.samples:
            _check_sample(s, self.num_classes, self.feature_dim)
            if s.id in seen:
                raise IntegrityError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @cached_property
    def X(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, self.feature_dim))
        return np.array([s.features for s in self.samples], dtype=np.float64)

    @cached_property
    def y(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @cached_property
    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    @cached_property
    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    @property
    def flipped_ids(self) -> list[str]:
        return [s.id for s in self.samples if s.flipped]

    def subset(self, ids: Iterable[str], name: str | None = None) -> Dataset:
        """Samples with the given ids, in the order given."""
        lookup = self.by_id
        try:
            picked = [lookup[i] for i in ids]
        except KeyError as exc:
            raise IntegrityError(f"unknown sample id {exc.args[0]!r}") from None
        return Dataset(picked, self.num_classes, self.feature_dim, name or self.name, dict(self.meta))

    def without(self, sample_id: str) -> Dataset:
        return Dataset(
            [s for s in self.samples if s.id != sample_id],
            self.num_classes,
            self.feature_dim,
            self.name,
            dict(self.meta),
        )


@dataclass(frozen=True)
class EvalSet:
    """Evaluation samples plus the reference time used for decay exponents."""

    samples: tuple[Sample, ...]
    reference_time: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.reference_time is None and self.samples:
            object.__setattr__(self, "reference_time", max(s.t for s in self.samples))

    @classmethod
    def from_dataset(cls, d: Dataset, reference_time: int | None = None) -> EvalSet:
        return cls(d.samples, reference_time)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def T(self) -> int | None:
        return self.reference_time


def _check_sample(s: Sample, num_classes: int, feature_dim: int) -> None:
    if len(s.features) != feature_dim:
        raise SchemaError(
            f"sample {s.id!r} has {len(s.features)} features, expected {feature_dim}"
        )
    if s.label >= num_classes:
        raise SchemaError(f"sample {s.id!r} label {s.label} >= num_classes {num_classes}")


# ---------------------------------------------------------------------------
# JSONL I/O


def save_jsonl(d: Dataset, path: str | Path) -> Path:
    path = Path(path)
    header: dict[str, Any] = {
        "num_classes": d.num_classes,
        "feature_dim": d.feature_dim,
        "name": d.name,
    }
    if d.meta:
        header["meta"] = d.meta
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for s in d.samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")
    return path


def load_jsonl(path: str | Path) -> Dataset:
    """Parse a sample JSONL file.

    The first line is a header carrying ``num_classes``, ``feature_dim`` and
    ``name``; every following non-blank line is one sample. Errors carry the
    1-based line number of the offending record.
    """
    path = Path(path)
    samples: list[Sample] = []
    seen: set[str] = set()
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON in {path}: {exc.msg}", lineno) from None
            if header is None:
                header = _parse_header(obj, lineno)
                continue
            try:
                s = Sample.from_json(obj)
                _check_sample(s, header["num_classes"], header["feature_dim"])
            except SchemaError as exc:
                raise SchemaError(str(exc), lineno) from None
            if s.id in seen:
                raise IntegrityError(f"line {lineno}: duplicate sample id {s.id!r}")
            seen.add(s.id)
            samples.append(s)
    if header is None:
        raise ParseError(f"{path} is empty; expected a header line", 1)
    return Dataset(
        samples, header["num_classes"], header["feature_dim"], header["name"], header["meta"]
    )


def _parse_header(obj: Any, lineno: int) -> dict[str, Any]:
    if not isinstance(obj, dict) or "num_classes" not in obj or "feature_dim" not in obj:
        raise SchemaError("header must carry num_classes and feature_dim", lineno)
    nc, fd = obj["num_classes"], obj["feature_dim"]
    if not isinstance(nc, int) or nc < 2:
        raise SchemaError(f"num_classes must be an integer >= 2, got {nc!r}", lineno)
    if not isinstance(fd, int) or fd < 1:
        raise SchemaError(f"feature_dim must be an integer >= 1, got {fd!r}", lineno)
    return {
        "num_classes": nc,
        "feature_dim": fd,
        "name": str(obj.get("name", "dataset")),
        "meta": dict(obj.get("meta") or {}),
    }


# ---------------------------------------------------------------------------
# Grouping and splitting


def group_by_user(d: Dataset) -> dict[str, list[Sample]]:
    groups: dict[str, list[Sample]] = defaultdict(list)
    for s in d.samples:
        groups[s.user_id].append(s)
    return {u: sorted(v, key=lambda s: (s.t, s.id)) for u, v in groups.items()}


def split(
    d: Dataset, fractions: Sequence[float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Random train/val/test partition.

    Val and test sizes are floor-rounded; the remainder goes to train. Each
    part keeps the original dataset order.
    """
    if len(fractions) != 3:
        raise ValueError("fractions must be a (train, val, test) triple")
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ValueError(f"fractions must lie in [0, 1], got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)!r}")
    n = len(d)
    n_val = math.floor(fractions[1] * n + 1e-9)
    n_test = math.floor(fractions[2] * n + 1e-9)
    perm = np.random.default_rng(seed).permutation(n)
    val_idx = np.sort(perm[:n_val])
    test_idx = np.sort(perm[n_val : n_val + n_test])
    train_idx = np.sort(perm[n_val + n_test :])

    def part(idx, suffix):
        return Dataset(
            [d.samples[i] for i in idx], d.num_classes, d.feature_dim,
            f"{d.name}/{suffix}", dict(d.meta),
        )

    return part(train_idx, "train"), part(val_idx, "val"), part(test_idx, "test")


# ---------------------------------------------------------------------------
# Synthetic behaviour data


@dataclass(frozen=True)
class SyntheticConfig:
    n_users: int = 40
    steps_per_user: int = 5
    feature_dim: int = 4
    noise_rate: float = 0.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        for key in ("n_users", "steps_per_user", "feature_dim"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be >= 1")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def make_synthetic(cfg: SyntheticConfig | None = None, **kwargs) -> Dataset:
    """Per-user behaviour sequences labelled by a hidden linear rule.

    Each user has a latent offset; the record at time t is the offset plus
    isotropic noise. The clean label is ``score > 0`` for a random unit
    direction. Exactly ``round(noise_rate * n)`` labels are flipped and the
    affected samples carry ``flipped=True``.
    """
    cfg = cfg or SyntheticConfig(**kwargs)
    rng = np.random.default_rng(cfg.seed)
    direction = rng.standard_normal(cfg.feature_dim)
    direction /= np.linalg.norm(direction)
    offsets = 0.5 * rng.standard_normal((cfg.n_users, cfg.feature_dim))
    starts = rng.integers(0, cfg.steps_per_user, size=cfg.n_users)

    n = cfg.n_users * cfg.steps_per_user
    width = max(3, len(str(n - 1)))
    uwidth = max(3, len(str(cfg.n_users - 1)))
    rows = []
    for u in range(cfg.n_users):
        for k in range(cfg.steps_per_user):
            x = offsets[u] + rng.standard_normal(cfg.feature_dim)
            rows.append((f"u{u:0{uwidth}d}", int(starts[u]) + k, x))

    n_flip = round_half_up(cfg.noise_rate * n)
    flip_idx = set(rng.choice(n, size=n_flip, replace=False).tolist()) if n_flip else set()

    samples = []
    for i, (user, t, x) in enumerate(rows):
        clean = int(float(x @ direction) > 0.0)
        label = 1 - clean if i in flip_idx else clean
        feats = tuple(float(v) for v in x)
        sentence = (
            f"Applicant {user} at period {t} has behaviour profile "
            + "[" + ", ".join(f"{v:.3f}" for v in feats) + "]."
        )
        samples.append(
            Sample(
                id=f"s{i:0{width}d}",
                user_id=user,
                t=t,
                features=feats,
                label=label,
                text_fields={
                    "sentence": sentence,
                    "context": sentence,
                    "question": "Is this applicant likely to default",
                    "answer": "Yes" if label == 1 else "No",
                },
                flipped=i in flip_idx,
            )
        )
    meta = {
        "generator": "linear",
        "direction": [float(v) for v in direction],
        "noise_rate": cfg.noise_rate,
        "seed": cfg.seed,
        "flipped_ids": [s.id for s in samples if s.flipped],
    }
    return Dataset(samples, 2, cfg.feature_dim, cfg.name, meta)


def clean_label(s: Sample) -> int:
    """Ground-truth label of a binary synthetic sample (undoes a recorded flip)."""
    return 1 - s.label if s.flipped else s.label
