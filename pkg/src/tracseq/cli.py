"""Command-line pipeline: synth -> train -> score -> prune -> mix -> render -> eval.

Every subcommand accepts ``--config FILE`` (a JSON object keyed by flag
names, a pipeline config with one section per command, or a previous run
log) and ``--out DIR``. Explicit flags override file values; the resolved
configuration is written to ``DIR/run_log_<command>.json``.

Exit codes: 0 success, 2 usage or input errors, 1 runtime failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from tracseq import __version__
from tracseq.dataset import (
    EvalSet,
    Sample,
    SyntheticConfig,
    load_jsonl,
    make_synthetic,
    save_jsonl,
    split,
)
from tracseq.errors import InputError, TracSeqError
from tracseq.evaluation import (
    evaluate_model,
    evaluate_outputs,
    loo_oracle,
    spearman,
    write_loo_csv,
    write_report,
)
from tracseq.influence import (
    DecayConfig,
    read_scores_csv,
    score_dataset,
    self_influence_dataset,
    write_breakdown_jsonl,
    write_scores_csv,
)
from tracseq.manifest import validate_finetune_manifest
from tracseq.model import ModelSpec, grad_check, init_params
from tracseq.pruner import MixPlan, build_mix, export_instruct_jsonl, resolve_k, select_topk
from tracseq.trainer import TrainConfig, load_store, train

log = logging.getLogger("tracseq")

TIME_AXIS = {"step": "checkpoint_step", "timestamp": "sample_timestamp"}

DEFAULTS: dict[str, dict[str, Any]] = {
    "synth": {"n_users": 40, "steps_per_user": 5, "feature_dim": 4, "noise_rate": 0.1,
              "seed": 42, "name": "synthetic", "split": [0.6, 0.2, 0.2]},
    "train": {"data": None, "model": "logistic", "hidden": [8], "init_seed": None,
              "init_scale": 0.1, "epochs": 10, "batch_size": 32, "lr": 0.1,
              "schedule": "constant", "lr_min": None, "checkpoint_every": 10, "seed": 42},
    "score": {"run": None, "train": None, "eval": None, "gamma": 0.9, "time_axis": "step",
              "reference_time": None, "strict": False, "tracincp": False, "threads": None,
              "breakdown": False, "self_influence": False},
    "prune": {"scores": None, "k": None, "k_frac": 0.3},
    "mix": {"data": None, "topk": None, "ratio": 0.3, "total": None, "seed": 42},
    "render": {"data": None, "plan": None, "task": "classification"},
    "eval": {"run": None, "data": None, "f1_mode": None, "pos_class": 1, "outputs": None,
             "lexicon": None},
    "oracle": {"run": None, "train": None, "eval": None, "max_n": 256, "workers": 1,
               "scores": None},
    "gradcheck": {"model": "logistic", "feature_dim": 4, "num_classes": 2, "hidden": [4],
                  "instances": 100, "h": 1e-6, "tol": 1e-5, "seed": 42},
    "validate-manifest": {"manifest": None},
    "pipeline": {},
    "report": {"seeds": [0, 1, 2, 3, 4], "fractions": [0.1, 0.2, 0.3, 0.5, 0.7, 0.9]},
}

REQUIRED = {
    "train": ["data"],
    "score": ["run", "train", "eval"],
    "prune": ["scores"],
    "mix": ["data", "topk"],
    "render": ["data", "plan"],
    "eval": ["data"],
    "oracle": ["run", "train", "eval"],
    "validate-manifest": ["manifest"],
}


class UsageError(InputError):
    pass


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _existing(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing required input: {what}")
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


# ---------------------------------------------------------------------------
# Command bodies. Each takes the resolved config and output directory and
# returns (input paths, output paths, summary).


def cmd_synth(cfg, out):
    d = make_synthetic(SyntheticConfig(
        n_users=cfg["n_users"], steps_per_user=cfg["steps_per_user"],
        feature_dim=cfg["feature_dim"], noise_rate=cfg["noise_rate"], seed=cfg["seed"],
        name=cfg["name"],
    ))
    outputs = [save_jsonl(d, out / "all.jsonl")]
    parts = split(d, cfg["split"], cfg["seed"])
    for name, part in zip(("train", "val", "test"), parts):
        outputs.append(save_jsonl(part, out / f"{name}.jsonl"))
    return [], outputs, {"n": len(d), "flipped": len(d.flipped_ids),
                         "sizes": [len(p) for p in parts]}


def _model_spec(cfg, d) -> ModelSpec:
    hidden = tuple(cfg["hidden"]) if cfg["model"] == "mlp" else ()
    seed = cfg["init_seed"] if cfg["init_seed"] is not None else cfg["seed"]
    return ModelSpec(cfg["model"], d.feature_dim, d.num_classes, hidden, seed, cfg["init_scale"])


def cmd_train(cfg, out):
    data = _existing(cfg["data"], "--data")
    d = load_jsonl(data)
    spec = _model_spec(cfg, d)
    tcfg = TrainConfig(
        epochs=cfg["epochs"], batch_size=cfg["batch_size"], schedule=cfg["schedule"],
        eta=cfg["lr"], eta_min=cfg["lr_min"] if cfg["lr_min"] is not None else 0.0,
        checkpoint_every=cfg["checkpoint_every"], shuffle_seed=cfg["seed"],
    )
    store = train(spec, d, tcfg, out_dir=out)
    losses = spec.losses(store.final_params, d.X, d.y)
    return [data], [out / "manifest.json", *sorted(out.glob("ckpt_*.bin"))], {
        "checkpoints": len(store), "final_time": store.final_time,
        "final_train_loss": float(losses.mean()),
    }


def _decay(cfg) -> DecayConfig:
    if cfg["tracincp"]:
        return DecayConfig(gamma=1.0, time_axis=TIME_AXIS[cfg["time_axis"]],
                           reference_time=cfg["reference_time"], strict=cfg["strict"])
    return DecayConfig(gamma=cfg["gamma"], time_axis=TIME_AXIS[cfg["time_axis"]],
                       reference_time=cfg["reference_time"], strict=cfg["strict"])


def cmd_score(cfg, out):
    run = _existing(cfg["run"], "--run")
    tr_path, ev_path = _existing(cfg["train"], "--train"), _existing(cfg["eval"], "--eval")
    store = load_store(run)
    tr, ev = load_jsonl(tr_path), load_jsonl(ev_path)
    decay = _decay(cfg)
    records = score_dataset(store, store.model_spec, tr, EvalSet.from_dataset(ev), decay,
                            threads=cfg["threads"])
    outputs = [write_scores_csv(records, out / "scores.csv")]
    if cfg["breakdown"]:
        outputs.append(write_breakdown_jsonl(records, out / "breakdown.jsonl"))
    if cfg["self_influence"]:
        si = self_influence_dataset(store, store.model_spec, tr, decay)
        path = out / "self_influence.csv"
        with path.open("w", encoding="utf-8") as fh:
            fh.write("sample_id,self_influence\n")
            for s, v in zip(tr.samples, si):
                fh.write(f"{s.id},{float(v)!r}\n")
        outputs.append(path)
    return [run / "manifest.json", tr_path, ev_path], outputs, {
        "n_train": len(tr), "n_eval": len(ev), "gamma": decay.gamma,
    }


def cmd_prune(cfg, out):
    path = _existing(cfg["scores"], "--scores")
    records = read_scores_csv(path)
    if cfg["k"] is not None:
        k = resolve_k(len(records), k=cfg["k"])
    else:
        k = resolve_k(len(records), k_frac=cfg["k_frac"])
    ids = select_topk(records, k)
    target = out / "topk.json"
    target.write_text(json.dumps({"k": k, "n": len(records), "ids": ids}, indent=2) + "\n",
                      encoding="utf-8")
    return [path], [target], {"k": k}


def cmd_mix(cfg, out):
    data, topk = _existing(cfg["data"], "--data"), _existing(cfg["topk"], "--topk")
    d = load_jsonl(data)
    ids = json.loads(topk.read_text(encoding="utf-8"))["ids"]
    plan = build_mix(d, ids, cfg["ratio"], cfg["total"], cfg["seed"])
    target = plan.save(out / "mix_plan.json")
    return [data, topk], [target], {"high": len(plan.selected_high),
                                    "random": len(plan.selected_random)}


def cmd_render(cfg, out):
    data, plan_path = _existing(cfg["data"], "--data"), _existing(cfg["plan"], "--plan")
    d = load_jsonl(data)
    plan = MixPlan.load(plan_path)
    target = export_instruct_jsonl(plan, d, cfg["task"], out / "instruct.jsonl")
    return [data, plan_path], [target], {"lines": plan.total_n}


def cmd_eval(cfg, out):
    data = _existing(cfg["data"], "--data")
    inputs = [data]
    if cfg["outputs"] is not None:
        outputs_path = _existing(cfg["outputs"], "--outputs")
        inputs.append(outputs_path)
        rows = [json.loads(line) for line in outputs_path.read_text(encoding="utf-8").splitlines()
                if line.strip()]
        lexicon = cfg["lexicon"] or ["Yes", "No"]
        report = evaluate_outputs([r["output"] for r in rows], [r["gold"] for r in rows],
                                  lexicon, cfg["f1_mode"], lexicon[0])
    else:
        run = _existing(cfg["run"], "--run")
        inputs.append(run / "manifest.json")
        store = load_store(run)
        d = load_jsonl(data)
        report = evaluate_model(store.model_spec, store.final_params, d, cfg["f1_mode"],
                                cfg["pos_class"])
    write_report(report, out / "metrics.json", out / "metrics.txt")
    return inputs, [out / "metrics.json", out / "metrics.txt"], report.to_json()


def cmd_oracle(cfg, out):
    run = _existing(cfg["run"], "--run")
    tr_path, ev_path = _existing(cfg["train"], "--train"), _existing(cfg["eval"], "--eval")
    store = load_store(run)
    tcfg = TrainConfig.from_json(store.config)
    tr, ev = load_jsonl(tr_path), load_jsonl(ev_path)
    results = loo_oracle(store.model_spec, tr, EvalSet.from_dataset(ev), tcfg,
                         max_n=cfg["max_n"], workers=cfg["workers"])
    outputs = [write_loo_csv(results, out / "loo.csv")]
    summary: dict[str, Any] = {"n": len(results)}
    inputs = [run / "manifest.json", tr_path, ev_path]
    if cfg["scores"] is not None:
        spath = _existing(cfg["scores"], "--scores")
        inputs.append(spath)
        scores = {r.sample_id: r.score for r in read_scores_csv(spath)}
        ids = [r.sample_id for r in results]
        summary["spearman"] = spearman([scores[i] for i in ids], [r.delta for r in results])
    return inputs, outputs, summary


def cmd_gradcheck(cfg, out):
    rng = np.random.default_rng(cfg["seed"])
    hidden = tuple(cfg["hidden"]) if cfg["model"] == "mlp" else ()
    errors = []
    for i in range(cfg["instances"]):
        spec = ModelSpec(cfg["model"], cfg["feature_dim"], cfg["num_classes"], hidden,
                         init_seed=int(rng.integers(2**31)), init_scale=1.0)
        params = init_params(spec) + 0.1 * rng.standard_normal(spec.num_params)
        z = Sample(f"g{i}", "u", 0, rng.standard_normal(cfg["feature_dim"]),
                   int(rng.integers(cfg["num_classes"])))
        errors.append(grad_check(spec, params, z, cfg["h"]))
    worst = float(max(errors))
    summary = {"max_rel_error": worst, "instances": len(errors), "passed": worst < cfg["tol"]}
    print(f"max relative error {worst:.3e} over {len(errors)} instances")
    outputs = []
    if out is not None:
        path = out / "gradcheck.json"
        path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        outputs.append(path)
    if not summary["passed"]:
        raise TracSeqError(f"gradient check failed: {worst:.3e} >= {cfg['tol']}")
    return [], outputs, summary


def cmd_validate_manifest(cfg, out):
    path = _existing(cfg["manifest"], "manifest")
    manifest = validate_finetune_manifest(path)
    print(json.dumps(manifest.to_json(), indent=2))
    return [path], [], {"valid": True}


def bundled_config(name: str = "synthetic.json") -> dict:
    text = resources.files("tracseq").joinpath("configs", name).read_text(encoding="utf-8")
    return json.loads(text)


def cmd_pipeline(cfg, out):
    """Run every stage on one config; each stage writes into its own subdirectory."""
    sections = cfg.get("stages") or bundled_config()
    dirs = {name: out / name for name in
            ("data", "run", "scores", "prune", "mix", "render", "eval")}
    for p in dirs.values():
        p.mkdir(parents=True, exist_ok=True)

    def stage(name, target, **paths):
        run_command(name, {**DEFAULTS[name], **sections.get(name, {}), **paths}, target)

    stage("synth", dirs["data"])
    train_p, val_p, test_p = (str(dirs["data"] / f"{n}.jsonl") for n in ("train", "val", "test"))
    stage("train", dirs["run"], data=train_p)
    stage("score", dirs["scores"], run=str(dirs["run"]), train=train_p, eval=val_p)
    stage("prune", dirs["prune"], scores=str(dirs["scores"] / "scores.csv"))
    stage("mix", dirs["mix"], data=train_p, topk=str(dirs["prune"] / "topk.json"))
    stage("render", dirs["render"], data=train_p, plan=str(dirs["mix"] / "mix_plan.json"))
    stage("eval", dirs["eval"], run=str(dirs["run"]), data=test_p)
    artifacts = sorted(p for p in out.rglob("*") if p.is_file() and not p.name.startswith("run_log"))
    return [], artifacts, {"stages": list(dirs)}


def cmd_report(cfg, out):
    """Pruning, noisy-label and LOO experiments with CSV tables and PNG figures."""
    from tracseq import experiments, plotting

    seeds = list(cfg["seeds"])
    setup = experiments.PruningSetup(fractions=tuple(cfg["fractions"]))
    rows = [r for s in seeds for r in experiments.pruning_experiment(s, setup)]
    pruning_csv = out / "pruning.csv"
    with pruning_csv.open("w", encoding="utf-8") as fh:
        fh.write("seed,fraction,strategy,n,n_flipped,ks,acc\n")
        for r in rows:
            fh.write(f"{r.seed},{r.fraction},{r.strategy},{r.n},{r.n_flipped},{r.ks!r},{r.acc!r}\n")

    aucs = [experiments.noisy_label_auc(s) for s in seeds]
    noisy_csv = out / "noisy_labels.csv"
    noisy_csv.write_text("seed,auc\n" + "".join(f"{s},{a!r}\n" for s, a in zip(seeds, aucs)),
                         encoding="utf-8")
    loo = [experiments.loo_agreement(s) for s in seeds]
    loo_csv = out / "loo_agreement.csv"
    loo_csv.write_text("seed,spearman\n" + "".join(f"{r.seed},{r.rho!r}\n" for r in loo),
                       encoding="utf-8")

    figs = [plotting.plot_pruning(rows, out / "pruning_ks.png"),
            plotting.plot_pruning(rows, out / "pruning_acc.png", metric="acc"),
            plotting.plot_loo_agreement(loo[0].scores, loo[0].deltas, loo[0].rho,
                                        out / "loo_agreement.png")]
    d = make_synthetic(n_users=40, steps_per_user=5, feature_dim=4, noise_rate=0.1, seed=seeds[0])
    spec = ModelSpec("logistic", 4, 2, init_seed=seeds[0], init_scale=0.0)
    setup_n = experiments.NoisySetup()
    store = train(spec, d, dataclasses.replace(setup_n.train, shuffle_seed=seeds[0]))
    si = self_influence_dataset(store, spec, d, DecayConfig(gamma=setup_n.gamma))
    figs.append(plotting.plot_self_influence(si, [bool(s.flipped) for s in d.samples],
                                             out / "self_influence.png"))
    return [], [pruning_csv, noisy_csv, loo_csv, *figs], {
        "median_auc": float(np.median(aucs)),
        "median_spearman": float(np.median([r.rho for r in loo])),
    }


COMMANDS: dict[str, Callable] = {
    "synth": cmd_synth,
    "train": cmd_train,
    "score": cmd_score,
    "prune": cmd_prune,
    "mix": cmd_mix,
    "render": cmd_render,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "gradcheck": cmd_gradcheck,
    "validate-manifest": cmd_validate_manifest,
    "pipeline": cmd_pipeline,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# Argument parsing


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracseq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=None)
        p.add_argument("--config", help="JSON config file (flag names as keys)")
        p.add_argument("--out", help="output directory")
        return p

    p = command("synth", "generate a synthetic behaviour dataset and split it")
    p.add_argument("--n-users", type=int)
    p.add_argument("--steps-per-user", type=int)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--noise-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--name")
    p.add_argument("--split", type=_floats, help="train,val,test fractions")

    p = command("train", "train the agent model and store checkpoints")
    p.add_argument("--data")
    p.add_argument("--model", choices=["logistic", "mlp"])
    p.add_argument("--hidden", type=_ints, help="comma-separated hidden widths (mlp)")
    p.add_argument("--init-seed", type=int)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float, help="constant step size, or the cosine maximum")
    p.add_argument("--schedule", choices=["constant", "cosine"])
    p.add_argument("--lr-min", type=float)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--seed", type=int, help="shuffle seed")

    p = command("score", "TracSeq influence of training samples on an eval set")
    p.add_argument("--run")
    p.add_argument("--train")
    p.add_argument("--eval")
    p.add_argument("--gamma", type=float)
    p.add_argument("--time-axis", choices=sorted(TIME_AXIS))
    p.add_argument("--reference-time", type=int)
    p.add_argument("--strict", action="store_const", const=True)
    p.add_argument("--tracincp", action="store_const", const=True,
                   help="undecayed scores (gamma = 1)")
    p.add_argument("--threads", type=int)
    p.add_argument("--breakdown", action="store_const", const=True)
    p.add_argument("--self-influence", action="store_const", const=True)

    p = command("prune", "select the Top-K samples by score")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int)
    g.add_argument("--k-frac", type=float)
    p.add_argument("--scores")

    p = command("mix", "compose Top-K and random samples into a training mixture")
    p.add_argument("--data")
    p.add_argument("--topk")
    p.add_argument("--ratio", type=float)
    p.add_argument("--total", type=int)
    p.add_argument("--seed", type=int)

    p = command("render", "render a mixture as instruction JSONL")
    p.add_argument("--data")
    p.add_argument("--plan")
    p.add_argument("--task", choices=["sentiment", "classification", "qa"])

    p = command("eval", "Acc/F1/Miss/KS of a trained run or of raw text outputs")
    p.add_argument("--run")
    p.add_argument("--data")
    p.add_argument("--f1-mode", choices=["binary", "macro"])
    p.add_argument("--pos-class", type=int)
    p.add_argument("--outputs", help="JSONL of {output, gold} records")
    p.add_argument("--lexicon", type=lambda s: [w for w in s.split(",") if w])

    p = command("oracle", "leave-one-out retraining deltas")
    p.add_argument("--run")
    p.add_argument("--train")
    p.add_argument("--eval")
    p.add_argument("--max-n", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--scores", help="scores.csv to correlate with the deltas")

    p = command("gradcheck", "finite-difference check of the analytic gradients")
    p.add_argument("--model", choices=["logistic", "mlp"])
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--num-classes", type=int)
    p.add_argument("--hidden", type=_ints)
    p.add_argument("--instances", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)

    p = command("validate-manifest", "validate a LoRA fine-tune manifest")
    p.add_argument("manifest", nargs="?")

    command("pipeline", "run synth -> train -> score -> prune -> mix -> render -> eval")

    p = command("report", "run the desk-scale experiments and render figures")
    p.add_argument("--seeds", type=_ints)
    p.add_argument("--fractions", type=_floats)
    return parser


def _file_config(path: str | None, name: str) -> dict[str, Any]:
    if path is None:
        return {}
    p = _existing(path, "--config")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON config ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise UsageError(f"{p}: config must be a JSON object")
    if "command" in obj and "config" in obj:  # a previous run log
        obj = obj["config"]
    elif name == "pipeline":
        return {"stages": obj}
    elif name in obj and isinstance(obj[name], dict):
        obj = obj[name]
    return {k.replace("-", "_"): v for k, v in obj.items()}


def resolve_config(name: str, ns: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS[name])
    file_cfg = _file_config(ns.config, name)
    allowed = set(cfg) | {"out", "stages"}
    unknown = sorted(set(file_cfg) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys for {name}: {unknown}")
    cfg.update(file_cfg)
    for key, value in vars(ns).items():
        if key in ("command", "config", "verbose") or value is None:
            continue
        cfg[key] = value
    if name == "prune" and ns.k is not None:
        cfg["k_frac"] = None
    for key in REQUIRED.get(name, []):
        if cfg.get(key) is None:
            raise UsageError(f"{name}: --{key.replace('_', '-')} is required")
    return cfg


def run_command(name: str, cfg: dict[str, Any], out: str | Path | None) -> dict[str, Any]:
    out_path = Path(out) if out is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    elif name not in ("gradcheck", "validate-manifest"):
        raise UsageError(f"{name}: --out is required")
    log.info("%s config: %s", name, json.dumps({k: v for k, v in cfg.items() if k != "stages"},
                                                 sort_keys=True, default=str))
    start = time.perf_counter()
    inputs, outputs, summary = COMMANDS[name](cfg, out_path)
    entry = {
        "command": name,
        "version": __version__,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "inputs": {str(p): sha256_file(p) for p in inputs if Path(p).is_file()},
        "outputs": {str(p): sha256_file(p) for p in outputs if Path(p).is_file()},
        "summary": summary,
        "wall_time_s": time.perf_counter() - start,
    }
    if out_path is not None:
        (out_path / f"run_log_{name}.json").write_text(
            json.dumps(entry, indent=2, default=str) + "\n", encoding="utf-8")
    return entry


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(ns.command, ns)
        run_command(ns.command, cfg, cfg.get("out"))
    except (InputError, FileNotFoundError, ValueError) as exc:
        print(f"tracseq {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (TracSeqError, OSError) as exc:
        print(f"tracseq {ns.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
