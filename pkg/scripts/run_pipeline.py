"""Run the full pipeline on the committed default configs.

gen -> train-expert -> predict -> rank -> train -> eval, all through the
command-line surface, into one output directory. Stage wall times are
printed so regressions against the five-minute budget are visible.
"""

import argparse
import sys
import time
from pathlib import Path

from multisup.cli import main as cli

REPO = Path(__file__).resolve().parent.parent


def stage(name, argv):
    started = time.perf_counter()
    code = cli(argv)
    print(f"[{name}] {'ok' if code == 0 else 'FAILED'} in {time.perf_counter() - started:.1f}s")
    if code != 0:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/pipeline", help="output directory root")
    ap.add_argument("--synth-config", default=str(REPO / "configs" / "default_synth.json"))
    ap.add_argument("--train-config", default=str(REPO / "configs" / "default_train.json"))
    ap.add_argument("--fraction", type=float, default=0.1, help="selected share of the distant corpus")
    ap.add_argument("--seed", type=int, default=None, help="override the config seeds")
    args = ap.parse_args()

    out = Path(args.out)
    seed_sets = ["--set", f"seed={args.seed}"] if args.seed is not None else []
    corpus = out / "corpus"
    started = time.perf_counter()

    stage("gen", ["gen", "--config", args.synth_config, "--out", str(corpus)] + seed_sets)
    stage("train-expert", ["train-expert", "--config", args.train_config,
                           "--annotated", str(corpus / "annotated_train.jsonl"),
                           "--dev", str(corpus / "dev.jsonl"),
                           "--out", str(out / "expert")] + seed_sets)
    stage("predict", ["predict", "--params", str(out / "expert" / "expert.params"),
                      "--corpus", str(corpus / "ds.jsonl"),
                      "--out", str(out / "expert")])
    stage("rank", ["rank", "--corpus", str(corpus / "ds.jsonl"),
                   "--predictions", str(out / "expert" / "predictions.tsv"),
                   "--annotated", str(corpus / "annotated_train.jsonl"),
                   "--fraction", str(args.fraction),
                   "--out", str(out / "rank")])
    stage("train", ["train", "--config", args.train_config,
                    "--annotated", str(corpus / "annotated_train.jsonl"),
                    "--augmentation", str(corpus / "ds.jsonl"),
                    "--selected", str(out / "rank" / "selected.txt"),
                    "--predictions", str(out / "expert" / "predictions.tsv"),
                    "--dev", str(corpus / "dev.jsonl"),
                    "--out", str(out / "model")] + seed_sets)
    stage("eval", ["eval", "--params", str(out / "model" / "model.params"),
                   "--corpus", str(corpus / "test.jsonl"),
                   "--train-corpus", str(corpus / "annotated_train.jsonl"),
                   "--out", str(out / "metrics")])

    print(f"pipeline finished in {time.perf_counter() - started:.1f}s; artifacts under {out}/")


if __name__ == "__main__":
    main()
