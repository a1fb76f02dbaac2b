"""Command line pipeline around corpus generation, training and ranking.

Subcommands:

* gen           synthesize corpus splits into a directory
* train-expert  fit the expert scorer on the annotated split
* predict       score a corpus with a saved model (expert sweep)
* rank          rank distant documents by informativeness and select
* train         fit the main model on annotated plus selected documents
* eval          fact-level metrics of a saved model on a corpus
* cost          compare pipeline training costs

Every output directory receives a ``manifest.json`` recording the command,
config, input digests and wall-clock timing. The manifest is the only
output whose bytes vary between reruns; everything else is deterministic
given the same inputs and seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    build_synth_config,
    build_train_config,
    config_as_dict,
    env_overrides,
    load_json_config,
    parse_set_overrides,
    threads_from_env,
)
from .corpus import CorpusError, CorpusSplit, load_corpus, save_corpus, validate_corpus
from .costmodel import PipelinePlan, Stage, bundled_plans, cost_table
from .metrics import train_fact_projections
from .model import load_params, save_params, save_params_meta
from .parallel import default_threads, parallel_map
from .ranking import (
    RankedCorpus,
    compute_class_weights,
    rank_documents,
    rank_random,
    save_ranking,
    select_top,
    take_documents,
)
from .supervision import (
    PredictionAlignmentError,
    PredictionTable,
    load_predictions,
    run_expert,
    save_predictions,
)
from .trainer import evaluate, train_expert, train_main


class CliError(Exception):
    pass


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class Manifest:
    def __init__(self, command: str, args: argparse.Namespace) -> None:
        self.command = command
        self.started_at = _utc_now()
        self.t0 = time.monotonic()
        self.argv = list(getattr(args, "invoked_argv", sys.argv[1:]))
        self.config: dict = {}
        self.inputs: dict = {}
        self.extra: dict = {}

    def add_input(self, path) -> None:
        path = Path(path)
        if path.is_file():
            self.inputs[str(path)] = _sha256(path)

    def write(self, out_dir: Path) -> None:
        outputs = {}
        for child in sorted(out_dir.iterdir()):
            if child.is_file() and child.name != "manifest.json":
                outputs[child.name] = _sha256(child)
        record = {
            "command": self.command,
            "argv": self.argv,
            "version": __version__,
            "numpy": np.__version__,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": outputs,
            "started_at": self.started_at,
            "finished_at": _utc_now(),
            "wall_seconds": round(time.monotonic() - self.t0, 6),
        }
        record.update(self.extra)
        (out_dir / "manifest.json").write_text(
            json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus_arg(path, format: str, split: str | None = None, schema=None):
    if path is None:
        return None
    return load_corpus(path, format=format, split=split, schema=schema)


def _maybe_config_file(path) -> dict | None:
    return load_json_config(path) if path else None


def _train_config_from(args):
    sets = parse_set_overrides(args.set)
    cfg = build_train_config(_maybe_config_file(args.config), env_overrides(), sets,
                             where=str(args.config or "defaults"))
    return cfg


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    sets = parse_set_overrides(args.set)
    if args.seed is not None:
        sets = dict(sets, seed=args.seed)
    cfg = build_synth_config(_maybe_config_file(args.config), env_overrides(), sets,
                             where=str(args.config or "defaults"))
    from .synth import generate_synthetic

    manifest = Manifest("gen", args)
    if args.config:
        manifest.add_input(args.config)
    manifest.config = config_as_dict(cfg)
    result = generate_synthetic(cfg)
    out = _out_dir(args)
    for name, split in result.splits.items():
        save_corpus(split, out / f"{name}.jsonl")
    report = validate_corpus(result.annotated)
    manifest.extra["annotated_report"] = {
        "documents": report.document_count,
        "instances": report.instance_count,
        "distinct_gold_classes": report.distinct_gold_classes,
        "violations": report.violations,
    }
    manifest.write(out)
    print(
        f"wrote {out}: "
        + ", ".join(f"{name}={len(split.documents)} docs" for name, split in result.splits.items())
    )
    return 0


def cmd_train_expert(args) -> int:
    cfg = _train_config_from(args)
    annotated = _load_corpus_arg(args.annotated, args.format)
    dev = _load_corpus_arg(args.dev, args.format)
    manifest = Manifest("train-expert", args)
    for p in (args.annotated, args.dev, args.config):
        if p:
            manifest.add_input(p)
    manifest.config = config_as_dict(cfg)
    result = train_expert(annotated, cfg, dev=dev)
    out = _out_dir(args)
    save_params(result.params, out / "expert.params")
    save_params_meta(out / "expert.params", {
        "role": "expert",
        "classes": list(annotated.schema.classes),
        "feature_dim": annotated.feature_dim,
        "best_epoch": result.best_epoch,
        "best_dev_f1": result.best_dev_f1,
    })
    _write_history(out, result)
    manifest.extra["best_epoch"] = result.best_epoch
    manifest.extra["best_dev_f1"] = result.best_dev_f1
    manifest.write(out)
    tail = f", best dev F1 {result.best_dev_f1:.4f} at epoch {result.best_epoch}" if dev else ""
    print(f"trained expert on {len(annotated.documents)} documents{tail}")
    return 0


def _write_history(out: Path, result) -> None:
    # One record per epoch plus a final summary line; floats only, so the
    # file is deterministic (wall-clock lives in the manifest instead).
    lines = []
    for s in result.history:
        lines.append(json.dumps(
            {"epoch": s.epoch, "mean_loss": s.mean_loss, "dev_f1": s.dev_f1,
             "dev_ign_f1": s.dev_ign_f1},
            separators=(",", ":"),
        ))
    lines.append(json.dumps(
        {"summary": {"epochs": len(result.history), "best_epoch": result.best_epoch,
                     "best_dev_f1": result.best_dev_f1}},
        separators=(",", ":"),
    ))
    (out / "history.jsonl").write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")


def cmd_predict(args) -> int:
    params = load_params(args.params)
    corpus = _load_corpus_arg(args.corpus, args.format, split=args.split)
    manifest = Manifest("predict", args)
    manifest.add_input(args.params)
    manifest.add_input(args.corpus)
    threads = args.threads

    # Per-document scoring parallelizes cleanly; merge preserves corpus order.
    def score(doc):
        sub = CorpusSplit(name=corpus.name, documents=[doc],
                          feature_dim=corpus.feature_dim, schema=corpus.schema)
        return run_expert(params, sub)

    tables = parallel_map(score, corpus.documents, threads=threads)
    entries = {}
    for table in tables:
        entries.update(table.entries)
    table = PredictionTable(n_classes=params.n_classes, entries=entries)
    out = _out_dir(args)
    save_predictions(table, out / "predictions.tsv")
    manifest.extra["instances"] = len(table)
    manifest.write(out)
    print(f"scored {len(table)} instances across {len(corpus.documents)} documents")
    return 0


def cmd_rank(args) -> int:
    corpus = _load_corpus_arg(args.corpus, args.format, split="ds")
    manifest = Manifest("rank", args)
    manifest.add_input(args.corpus)
    out = _out_dir(args)
    if args.method == "random":
        selected = rank_random(corpus, args.fraction, args.seed)
        scores = {doc_id: 0.0 for doc_id in selected}
        ranking = RankedCorpus(doc_ids=selected, scores=scores)
    else:
        if bool(args.predictions) == bool(args.params):
            raise CliError(
                "informativeness ranking needs exactly one expert source: "
                "--predictions or --params"
            )
        if not args.annotated:
            raise CliError("informativeness ranking needs --annotated for class weights")
        if args.predictions:
            table = load_predictions(args.predictions)
            manifest.add_input(args.predictions)
        else:
            table = run_expert(load_params(args.params), corpus)
            manifest.add_input(args.params)
        annotated = _load_corpus_arg(args.annotated, args.format)
        manifest.add_input(args.annotated)
        weights = compute_class_weights(annotated)
        ranking = rank_documents(corpus, table, weights)
        selected = select_top(ranking, args.fraction)
    save_ranking(ranking, out / "ranking.tsv")
    (out / "selected.txt").write_text("".join(d + "\n" for d in selected), encoding="utf-8")
    manifest.extra["method"] = args.method
    manifest.extra["fraction"] = args.fraction
    manifest.extra["selected"] = len(selected)
    manifest.write(out)
    print(f"selected {len(selected)} of {len(corpus.documents)} documents ({args.method})")
    return 0


def cmd_train(args) -> int:
    cfg = _train_config_from(args)
    if args.no_self_sup:
        cfg = replace(cfg, loss=replace(cfg.loss, self_supervision=False))
    if args.no_expert_sup and args.no_distant_sup:
        raise CliError("--no-expert-sup and --no-distant-sup are mutually exclusive")
    if args.no_expert_sup:
        cfg = replace(cfg, augmentation_policy="distant-only")
    if args.no_distant_sup:
        cfg = replace(cfg, augmentation_policy="expert-only")

    annotated = _load_corpus_arg(args.annotated, args.format)
    augmentation = _load_corpus_arg(args.augmentation, args.format, split="ds",
                                    schema=annotated.schema if annotated else None)
    dev = _load_corpus_arg(args.dev, args.format)
    table = load_predictions(args.predictions) if args.predictions else None

    if augmentation is not None and args.selected:
        doc_ids = [ln.strip() for ln in Path(args.selected).read_text(encoding="utf-8").splitlines()
                   if ln.strip()]
        augmentation = take_documents(augmentation, doc_ids)

    manifest = Manifest("train", args)
    for p in (args.annotated, args.augmentation, args.dev, args.predictions, args.selected,
              args.config):
        if p:
            manifest.add_input(p)
    manifest.config = config_as_dict(cfg)

    result = train_main(annotated, augmentation, table, cfg, dev=dev)
    out = _out_dir(args)
    save_params(result.params, out / "model.params")
    save_params_meta(out / "model.params", {
        "role": "main",
        "classes": list((annotated or augmentation).schema.classes),
        "feature_dim": (annotated or augmentation).feature_dim,
        "policy": cfg.augmentation_policy,
        "best_epoch": result.best_epoch,
        "best_dev_f1": result.best_dev_f1,
    })
    _write_history(out, result)
    manifest.extra["best_epoch"] = result.best_epoch
    manifest.extra["best_dev_f1"] = result.best_dev_f1
    manifest.extra["n_augmentation_docs"] = len(augmentation.documents) if augmentation else 0
    manifest.write(out)
    n_aug = len(augmentation.documents) if augmentation else 0
    tail = f", best dev F1 {result.best_dev_f1:.4f} at epoch {result.best_epoch}" if dev else ""
    print(
        f"trained on {len(annotated.documents) if annotated else 0} annotated "
        f"+ {n_aug} augmentation documents{tail}"
    )
    return 0


def cmd_eval(args) -> int:
    params = load_params(args.params)
    corpus = _load_corpus_arg(args.corpus, args.format, split=args.split)
    manifest = Manifest("eval", args)
    manifest.add_input(args.params)
    manifest.add_input(args.corpus)
    train_projections = set()
    for path in args.train_corpus or ():
        split = _load_corpus_arg(path, args.format)
        train_projections |= train_fact_projections([split])
        manifest.add_input(path)
    record = evaluate(params, corpus, train_projections)
    line = (
        f"precision={record.precision:.4f} recall={record.recall:.4f} f1={record.f1:.4f} "
        f"ign_f1={record.ign_f1:.4f} "
        f"(predicted={record.n_predicted} gold={record.n_gold} correct={record.n_correct})"
    )
    print(line)
    if args.out:
        out = _out_dir(args)
        (out / "metrics.json").write_text(
            json.dumps(record.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifest.extra["metrics"] = record.as_dict()
        manifest.write(out)
    return 0


def _plans_from_file(path) -> dict:
    data = load_json_config(path)
    plans = {}
    for name, stages in data.items():
        if not isinstance(stages, list):
            raise ConfigError(f"plan {name!r} must be a list of stages")
        built = []
        for st in stages:
            built.append(Stage(
                name=st.get("name", st.get("kind", "stage")),
                kind=st["kind"],
                data_size=float(st["data_size"]),
                epochs=int(st.get("epochs", 1)),
            ))
        plans[name] = PipelinePlan(name, tuple(built))
    return plans


def cmd_cost(args) -> int:
    plans = _plans_from_file(args.plans) if args.plans else bundled_plans()
    if args.baseline not in plans:
        raise CliError(f"baseline plan {args.baseline!r} not found; have {sorted(plans)}")
    rows = cost_table(plans, args.baseline)
    width = max(len(r[0]) for r in rows)
    for name, cost, ratio, label in rows:
        print(f"{name:<{width}}  cost={cost:10.2f}  relative={label:>4}  ({ratio:.2f})")
    if args.out:
        out = _out_dir(args)
        manifest = Manifest("cost", args)
        if args.plans:
            manifest.add_input(args.plans)
        payload = {
            name: {"cost": cost, "ratio": ratio, "label": label}
            for name, cost, ratio, label in rows
        }
        (out / "costs.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifest.write(out)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisup",
        description="Selective distant supervision for document-level relation extraction",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for per-document sweeps (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", default=None, help="JSON config file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config field (repeatable; dots nest)")
        p.add_argument("--format", choices=("native", "docred"), default="native",
                       help="corpus file format")

    p = sub.add_parser("gen", help="generate synthetic corpus splits")
    add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("train-expert", help="train the expert on annotated data")
    add_common(p)
    p.add_argument("--annotated", required=True)
    p.add_argument("--dev", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_expert)

    p = sub.add_parser("predict", help="score a corpus with a saved model")
    add_common(p, config=False)
    p.add_argument("--params", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default=None, help="split name override for the corpus file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("rank", help="rank and select distant documents")
    add_common(p, config=False)
    p.add_argument("--corpus", required=True, help="distantly supervised corpus")
    p.add_argument("--predictions", default=None, help="expert predictions TSV")
    p.add_argument("--params", default=None, help="expert checkpoint to run instead")
    p.add_argument("--annotated", default=None, help="annotated corpus for class weights")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--method", choices=("informativeness", "random"), default="informativeness")
    p.add_argument("--random", action="store_const", const="random", dest="method",
                   help="shorthand for --method random")
    p.add_argument("--seed", type=int, default=0, help="seed for the random method")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("train", help="train the main model")
    add_common(p)
    p.add_argument("--annotated", default=None)
    p.add_argument("--augmentation", default=None, help="distant corpus to add")
    p.add_argument("--selected", default=None, help="file listing selected doc ids")
    p.add_argument("--predictions", default=None, help="expert predictions TSV")
    p.add_argument("--dev", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-self-sup", action="store_true",
                   help="disable self supervision inside the loss weights")
    p.add_argument("--no-expert-sup", action="store_true",
                   help="ignore expert labels on augmentation instances")
    p.add_argument("--no-distant-sup", action="store_true",
                   help="ignore distant labels on augmentation instances")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a corpus")
    add_common(p, config=False)
    p.add_argument("--params", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--train-corpus", action="append", default=[],
                   help="training corpus for the ignore-train metric (repeatable)")
    p.add_argument("--out", default=None, help="optional directory for metrics.json")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("cost", help="compare pipeline training costs")
    p.add_argument("--plans", default=None, help="JSON file of named stage lists")
    p.add_argument("--baseline", default="annotated-only")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_cost)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.invoked_argv = list(argv) if argv is not None else sys.argv[1:]
    if args.threads is None:
        args.threads = threads_from_env(default_threads())
    try:
        return args.fn(args)
    except (CliError, ConfigError, CorpusError, PredictionAlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
