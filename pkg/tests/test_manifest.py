import json
from importlib import resources

import pytest

from tracseq.errors import ManifestError
from tracseq.manifest import parse_finetune_manifest, validate_finetune_manifest


def bundled() -> dict:
    text = resources.files("tracseq").joinpath("configs", "finetune_lora.json").read_text()
    return json.loads(text)


def test_bundled_manifest_is_valid(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(bundled()))
    m = validate_finetune_manifest(path)
    assert (m.lora_rank, m.lora_alpha) == (8, 16)
    assert m.target_modules == ("query", "key", "value")
    assert m.betas == (0.9, 0.999)
    assert m.training_steps is None


@pytest.mark.parametrize("patch, field", [
    ({"lr_min": 3e-5, "lr_max": 1e-5}, "lr_min/lr_max"),
    ({"betas": [0.9, 1.0]}, "betas[1]"),
    ({"betas": [0.0, 0.5]}, "betas[0]"),
    ({"lora_rank": 0}, "lora_rank"),
    ({"target_modules": []}, "target_modules"),
    ({"training_steps": -1}, "training_steps"),
])
def test_violations_name_the_field(patch, field):
    obj = {**bundled(), **patch}
    with pytest.raises(ManifestError) as info:
        parse_finetune_manifest(obj)
    assert info.value.field == field


def test_missing_field():
    obj = bundled()
    del obj["base_model"]
    with pytest.raises(ManifestError) as info:
        parse_finetune_manifest(obj)
    assert info.value.field == "base_model"


def test_training_steps_free():
    assert parse_finetune_manifest({**bundled(), "training_steps": 1200}).training_steps == 1200


def test_invalid_json(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{")
    with pytest.raises(ManifestError):
        validate_finetune_manifest(path)


def test_unknown_keys_kept():
    m = parse_finetune_manifest({**bundled(), "warmup": 100})
    assert m.extra["warmup"] == 100
    assert m.to_json()["betas"] == [0.9, 0.999]
