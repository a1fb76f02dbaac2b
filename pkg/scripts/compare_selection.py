"""Compare informativeness selection against its two baselines.

For each seed: train on the annotated split alone, on annotated plus a
random slice of the distant corpus, and on annotated plus the top-ranked
slice. Reports best dev F1 per arm and the mean margins.
"""

import argparse
import time
import warnings
from dataclasses import replace
from pathlib import Path

from multisup.config import build_synth_config, build_train_config, load_json_config
from multisup.ranking import (
    compute_class_weights,
    rank_and_select,
    rank_random,
    take_documents,
)
from multisup.supervision import run_expert
from multisup.synth import generate_synthetic
from multisup.trainer import train_expert, train_main

REPO = Path(__file__).resolve().parent.parent


def run_seed(seed, synth_base, train_base, fraction):
    data = generate_synthetic(replace(synth_base, seed=seed))
    cfg = replace(train_base, seed=seed)
    expert = train_expert(data.annotated, cfg, dev=data.dev)
    table = run_expert(expert.params, data.ds)
    weights = compute_class_weights(data.annotated)
    _, augmentation = rank_and_select(data.ds, table, weights, fraction)

    selected = train_main(data.annotated, augmentation, table, cfg, dev=data.dev)
    annotated_only = train_main(data.annotated, None, None, cfg, dev=data.dev)
    random_slice = take_documents(data.ds, rank_random(data.ds, fraction, seed))
    random_arm = train_main(data.annotated, random_slice, table, cfg, dev=data.dev)
    return (selected.best_dev_f1, annotated_only.best_dev_f1, random_arm.best_dev_f1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5, help="number of seeds, starting at 0")
    ap.add_argument("--fraction", type=float, default=0.1)
    ap.add_argument("--synth-config", default=str(REPO / "configs" / "default_synth.json"))
    ap.add_argument("--train-config", default=str(REPO / "configs" / "default_train.json"))
    ap.add_argument("--out", default=None, help="optional TSV to append per-seed rows to")
    args = ap.parse_args()

    warnings.filterwarnings("once", message=r"classes .* have no labels")
    synth_base = build_synth_config(load_json_config(args.synth_config))
    train_base = build_train_config(load_json_config(args.train_config))

    rows = []
    started = time.perf_counter()
    print("seed\tselected\tannotated-only\trandom")
    for seed in range(args.seeds):
        sel, base, rand = run_seed(seed, synth_base, train_base, args.fraction)
        rows.append((seed, sel, base, rand))
        print(f"{seed}\t{sel:.4f}\t{base:.4f}\t{rand:.4f}")

    mean = lambda i: sum(r[i] for r in rows) / len(rows)
    print(f"mean\t{mean(1):.4f}\t{mean(2):.4f}\t{mean(3):.4f}")
    print(f"margin vs annotated-only: {mean(1) - mean(2):+.4f}")
    print(f"margin vs random:         {mean(1) - mean(3):+.4f}")
    print(f"({time.perf_counter() - started:.1f}s)")

    if args.out:
        path = Path(args.out)
        header = not path.exists()
        with path.open("a", encoding="utf-8") as fh:
            if header:
                fh.write("seed\tselected\tannotated_only\trandom\n")
            for seed, sel, base, rand in rows:
                fh.write(f"{seed}\t{sel!r}\t{base!r}\t{rand!r}\n")


if __name__ == "__main__":
    main()
