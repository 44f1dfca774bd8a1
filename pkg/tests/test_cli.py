import json
import shutil
import subprocess
import sys

import pytest

from tracseq import cli
from tracseq.pruner import MixPlan


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A synthesised dataset and a trained run shared by the command tests."""
    root = tmp_path_factory.mktemp("ws")
    assert cli.main(["synth", "--out", str(root / "data"), "--n-users", "30",
                     "--steps-per-user", "5", "--seed", "3"]) == 0
    assert cli.main(["train", "--out", str(root / "run"), "--data", str(root / "data/train.jsonl"),
                     "--epochs", "5", "--batch-size", "15", "--lr", "0.5",
                     "--checkpoint-every", "3"]) == 0
    return root


def score_args(ws, out, *extra):
    return ["score", "--out", str(out), "--run", str(ws / "run"),
            "--train", str(ws / "data/train.jsonl"), "--eval", str(ws / "data/val.jsonl"), *extra]


class TestScore:
    def test_gamma_one_equals_tracincp(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path / "a", "--gamma", "1.0")) == 0
        assert cli.main(score_args(workspace, tmp_path / "b", "--tracincp")) == 0
        a = (tmp_path / "a/scores.csv").read_bytes()
        assert a == (tmp_path / "b/scores.csv").read_bytes()
        assert a.startswith(b"sample_id,score\n")

    def test_thread_count_does_not_change_output(self, workspace, tmp_path, monkeypatch):
        assert cli.main(score_args(workspace, tmp_path / "a", "--threads", "1")) == 0
        monkeypatch.setenv("TRACSEQ_THREADS", "4")
        assert cli.main(score_args(workspace, tmp_path / "b")) == 0
        assert (tmp_path / "a/scores.csv").read_bytes() == (tmp_path / "b/scores.csv").read_bytes()

    def test_breakdown_and_self_influence(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path, "--breakdown", "--self-influence",
                                   "--time-axis", "timestamp")) == 0
        assert (tmp_path / "breakdown.jsonl").exists()
        assert (tmp_path / "self_influence.csv").read_text().startswith("sample_id,self_influence\n")
        log = json.loads((tmp_path / "run_log_score.json").read_text())
        assert log["config"]["time_axis"] == "timestamp"

    def test_run_log_contents(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path, "--gamma", "0.7")) == 0
        log = json.loads((tmp_path / "run_log_score.json").read_text())
        assert log["command"] == "score"
        assert log["config"]["gamma"] == 0.7
        assert len(log["inputs"]) == 3 and all(len(h) == 64 for h in log["inputs"].values())
        assert "wall_time_s" in log

    def test_run_log_replays(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path / "a", "--gamma", "0.5")) == 0
        replay = ["score", "--config", str(tmp_path / "a/run_log_score.json"), "--out",
                  str(tmp_path / "b")]
        assert cli.main(replay) == 0
        assert (tmp_path / "a/scores.csv").read_bytes() == (tmp_path / "b/scores.csv").read_bytes()

    def test_flags_override_file(self, workspace, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"gamma": 0.5, "time_axis": "step"}))
        assert cli.main(score_args(workspace, tmp_path / "o", "--config", str(cfg),
                                   "--gamma", "0.8")) == 0
        log = json.loads((tmp_path / "o/run_log_score.json").read_text())
        assert log["config"]["gamma"] == 0.8


class TestMixAndRender:
    def test_mix_300_700(self, tmp_path):
        assert cli.main(["synth", "--out", str(tmp_path / "d"), "--n-users", "250",
                         "--split", "1,0,0"]) == 0
        data = tmp_path / "d/train.jsonl"
        ids = [json.loads(line)["id"] for line in data.read_text().splitlines()[1:]]
        topk = tmp_path / "topk.json"
        topk.write_text(json.dumps({"k": 400, "n": len(ids), "ids": ids[:400]}))
        assert cli.main(["mix", "--out", str(tmp_path / "m"), "--data", str(data),
                         "--topk", str(topk), "--ratio", "0.3", "--total", "1000"]) == 0
        plan = MixPlan.load(tmp_path / "m/mix_plan.json")
        assert (len(plan.selected_high), len(plan.selected_random)) == (300, 700)

    def test_prune_k_overrides_fraction(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path / "s")) == 0
        assert cli.main(["prune", "--out", str(tmp_path / "p"), "--scores",
                         str(tmp_path / "s/scores.csv"), "--k", "7"]) == 0
        assert json.loads((tmp_path / "p/topk.json").read_text())["k"] == 7


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        assert cli.main(["score", "--bogus"]) == 2
        assert "unrecognized" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        code = cli.main(["train", "--out", str(tmp_path), "--data", str(tmp_path / "none.jsonl")])
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_missing_required(self, tmp_path, capsys):
        assert cli.main(["prune", "--out", str(tmp_path)]) == 2
        assert "--scores is required" in capsys.readouterr().err

    def test_schema_violation(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"num_classes": 2, "feature_dim": 2}\n'
                       '{"id": "a", "user_id": "u", "t": 0, "features": [1.0], "label": 0}\n')
        assert cli.main(["train", "--out", str(tmp_path / "o"), "--data", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"gama": 0.5}))
        assert cli.main(["score", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "gama" in capsys.readouterr().err

    def test_invalid_gamma(self, workspace, tmp_path):
        assert cli.main(score_args(workspace, tmp_path, "--gamma", "1.5")) == 2

    def test_oracle_refusal(self, workspace, tmp_path, capsys):
        code = cli.main(["oracle", "--out", str(tmp_path), "--run", str(workspace / "run"),
                         "--train", str(workspace / "data/train.jsonl"),
                         "--eval", str(workspace / "data/val.jsonl"), "--max-n", "10"])
        assert code == 2
        assert "cap" in capsys.readouterr().err

    def test_gradcheck_failure_is_runtime_error(self, capsys):
        assert cli.main(["gradcheck", "--model", "mlp", "--instances", "3", "--h", "1.0"]) == 1

    def test_corrupt_checkpoint(self, workspace, tmp_path, capsys):
        run = tmp_path / "run"
        shutil.copytree(workspace / "run", run)
        (run / "ckpt_00000.bin").write_bytes(b"garbage")
        code = cli.main(["score", "--out", str(tmp_path / "o"), "--run", str(run),
                         "--train", str(workspace / "data/train.jsonl"),
                         "--eval", str(workspace / "data/val.jsonl")])
        assert code == 2
        assert "ckpt_00000.bin" in capsys.readouterr().err


class TestOtherCommands:
    def test_oracle_with_scores(self, tmp_path):
        assert cli.main(["synth", "--out", str(tmp_path / "d"), "--n-users", "8",
                         "--steps-per-user", "5", "--split", "0.6,0.4,0"]) == 0
        train_p, val_p = str(tmp_path / "d/train.jsonl"), str(tmp_path / "d/val.jsonl")
        assert cli.main(["train", "--out", str(tmp_path / "r"), "--data", train_p,
                         "--epochs", "20", "--batch-size", "24", "--checkpoint-every", "20"]) == 0
        assert cli.main(["score", "--out", str(tmp_path / "s"), "--run", str(tmp_path / "r"),
                         "--train", train_p, "--eval", val_p, "--tracincp"]) == 0
        assert cli.main(["oracle", "--out", str(tmp_path / "o"), "--run", str(tmp_path / "r"),
                         "--train", train_p, "--eval", val_p,
                         "--scores", str(tmp_path / "s/scores.csv")]) == 0
        log = json.loads((tmp_path / "o/run_log_oracle.json").read_text())
        assert -1.0 <= log["summary"]["spearman"] <= 1.0
        assert (tmp_path / "o/loo.csv").read_text().startswith("sample_id,base_loss,loo_loss,delta")

    def test_eval_outputs_mode(self, workspace, tmp_path):
        outputs = tmp_path / "out.jsonl"
        outputs.write_text("".join(json.dumps(r) + "\n" for r in [
            {"output": "Yes", "gold": "Yes"}, {"output": "no", "gold": "Yes"},
            {"output": "maybe", "gold": "No"}]))
        assert cli.main(["eval", "--out", str(tmp_path / "e"), "--data",
                         str(workspace / "data/test.jsonl"), "--outputs", str(outputs)]) == 0
        metrics = json.loads((tmp_path / "e/metrics.json").read_text())
        assert metrics["miss"] == pytest.approx(1 / 3)
        assert (tmp_path / "e/metrics.txt").exists()

    def test_eval_model_mode(self, workspace, tmp_path):
        assert cli.main(["eval", "--out", str(tmp_path), "--run", str(workspace / "run"),
                         "--data", str(workspace / "data/test.jsonl"), "--f1-mode", "macro"]) == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert set(metrics) == {"acc", "f1", "miss", "ks", "n"}

    def test_gradcheck(self, tmp_path, capsys):
        assert cli.main(["gradcheck", "--out", str(tmp_path), "--model", "mlp",
                         "--instances", "10"]) == 0
        assert json.loads((tmp_path / "gradcheck.json").read_text())["passed"] is True

    def test_validate_manifest(self, tmp_path, capsys):
        good = cli.bundled_config("finetune_lora.json")
        path = tmp_path / "m.json"
        path.write_text(json.dumps(good))
        assert cli.main(["validate-manifest", str(path)]) == 0
        path.write_text(json.dumps({**good, "lr_min": 3e-5, "lr_max": 1e-5}))
        assert cli.main(["validate-manifest", str(path)]) == 2
        assert "lr_min/lr_max" in capsys.readouterr().err

    def test_render_sentiment_rejects_yes_no(self, tmp_path):
        cfg = cli.bundled_config()
        cfg["render"] = {"task": "sentiment"}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["pipeline", "--config", str(path), "--out", str(tmp_path / "p")]) == 2

    @pytest.mark.slow
    def test_report(self, tmp_path):
        assert cli.main(["report", "--out", str(tmp_path), "--seeds", "0,1",
                         "--fractions", "0.3,0.5"]) == 0
        for name in ("pruning.csv", "noisy_labels.csv", "loo_agreement.csv", "pruning_ks.png",
                     "pruning_acc.png", "loo_agreement.png", "self_influence.png"):
            assert (tmp_path / name).stat().st_size > 0
        header = (tmp_path / "pruning.csv").read_text().splitlines()[0]
        assert header == "seed,fraction,strategy,n,n_flipped,ks,acc"

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "tracseq.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "tracseq" in proc.stdout
