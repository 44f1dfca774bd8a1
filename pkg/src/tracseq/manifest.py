"""Fine-tune manifest schema (LoRA on a 7B base). Validated only; never executed."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from tracseq.errors import ManifestError


@dataclass(frozen=True)
class FinetuneManifest:
    base_model: str
    method: str
    lora_rank: int
    lora_alpha: int
    target_modules: tuple[str, ...]
    lr_min: float
    lr_max: float
    batch_size: int
    grad_accum: int
    betas: tuple[float, float]
    schedule: str
    max_seq_len: int
    # null when the step count is not fixed in advance
    training_steps: int | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        obj = asdict(self)
        obj["target_modules"] = list(self.target_modules)
        obj["betas"] = list(self.betas)
        return obj


_REQUIRED = (
    "base_model", "method", "lora_rank", "lora_alpha", "target_modules", "lr_min",
    "lr_max", "batch_size", "grad_accum", "betas", "schedule", "max_seq_len",
)


def _int(obj, name, minimum=1):
    v = obj[name]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ManifestError(name, f"must be an integer >= {minimum}, got {v!r}")
    return v


def _float(obj, name):
    v = obj[name]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ManifestError(name, f"must be a positive number, got {v!r}")
    return float(v)


def _str(obj, name):
    v = obj[name]
    if not isinstance(v, str) or not v:
        raise ManifestError(name, f"must be a nonempty string, got {v!r}")
    return v


def parse_finetune_manifest(obj: Any) -> FinetuneManifest:
    if not isinstance(obj, dict):
        raise ManifestError("<root>", "manifest must be a JSON object")
    for name in _REQUIRED:
        if name not in obj:
            raise ManifestError(name, "required field is missing")
    lr_min, lr_max = _float(obj, "lr_min"), _float(obj, "lr_max")
    if lr_min > lr_max:
        raise ManifestError("lr_min/lr_max", f"lr_min={lr_min} exceeds lr_max={lr_max}")
    modules = obj["target_modules"]
    if not isinstance(modules, list) or not modules or not all(
        isinstance(m, str) and m for m in modules
    ):
        raise ManifestError("target_modules", "must be a nonempty list of strings")
    betas = obj["betas"]
    if not isinstance(betas, list) or len(betas) != 2:
        raise ManifestError("betas", f"must be a pair of numbers, got {betas!r}")
    for i, b in enumerate(betas):
        if not isinstance(b, (int, float)) or isinstance(b, bool) or not 0.0 < b < 1.0:
            raise ManifestError(f"betas[{i}]", f"must lie in (0, 1), got {b!r}")
    steps = obj.get("training_steps")
    if steps is not None:
        steps = _int(obj, "training_steps")
    known = set(_REQUIRED) | {"training_steps"}
    return FinetuneManifest(
        base_model=_str(obj, "base_model"),
        method=_str(obj, "method"),
        lora_rank=_int(obj, "lora_rank"),
        lora_alpha=_int(obj, "lora_alpha"),
        target_modules=tuple(modules),
        lr_min=lr_min,
        lr_max=lr_max,
        batch_size=_int(obj, "batch_size"),
        grad_accum=_int(obj, "grad_accum"),
        betas=(float(betas[0]), float(betas[1])),
        schedule=_str(obj, "schedule"),
        max_seq_len=_int(obj, "max_seq_len"),
        training_steps=steps,
        extra={k: v for k, v in obj.items() if k not in known},
    )


def validate_finetune_manifest(path: str | Path) -> FinetuneManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError("<file>", f"{path} is not valid JSON ({exc.msg})") from None
    return parse_finetune_manifest(obj)
