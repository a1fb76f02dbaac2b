"""Ablate the supervision sources one at a time.

Rows: the full method, self supervision off, expert supervision off
(distant labels only), distant supervision off (expert labels only), and
the annotated-only floor. Each row is a mean over seeds of the best dev
F1 with the same selected augmentation slice.
"""

import argparse
import time
import warnings
from dataclasses import replace
from pathlib import Path

from multisup.config import build_synth_config, build_train_config, load_json_config
from multisup.ranking import compute_class_weights, rank_and_select
from multisup.supervision import run_expert
from multisup.synth import generate_synthetic
from multisup.trainer import train_expert, train_main

REPO = Path(__file__).resolve().parent.parent

VARIANTS = [
    ("full", {}),
    ("- self sup", {"self_supervision": False}),
    ("- expert sup", {"policy": "distant-only"}),
    ("- distant sup", {"policy": "expert-only"}),
]


def variant_config(base, changes):
    cfg = base
    if "self_supervision" in changes:
        cfg = replace(cfg, loss=replace(cfg.loss, self_supervision=changes["self_supervision"]))
    if "policy" in changes:
        cfg = replace(cfg, augmentation_policy=changes["policy"])
    return cfg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3, help="number of seeds, starting at 0")
    ap.add_argument("--fraction", type=float, default=0.1)
    ap.add_argument("--synth-config", default=str(REPO / "configs" / "default_synth.json"))
    ap.add_argument("--train-config", default=str(REPO / "configs" / "default_train.json"))
    args = ap.parse_args()

    warnings.filterwarnings("once", message=r"classes .* have no labels")
    synth_base = build_synth_config(load_json_config(args.synth_config))
    train_base = build_train_config(load_json_config(args.train_config))

    scores = {name: [] for name, _ in VARIANTS}
    scores["annotated only"] = []
    started = time.perf_counter()
    for seed in range(args.seeds):
        data = generate_synthetic(replace(synth_base, seed=seed))
        cfg = replace(train_base, seed=seed)
        expert = train_expert(data.annotated, cfg, dev=data.dev)
        table = run_expert(expert.params, data.ds)
        weights = compute_class_weights(data.annotated)
        _, augmentation = rank_and_select(data.ds, table, weights, args.fraction)
        for name, changes in VARIANTS:
            vcfg = variant_config(cfg, changes)
            result = train_main(data.annotated, augmentation, table, vcfg, dev=data.dev)
            scores[name].append(result.best_dev_f1)
        scores["annotated only"].append(
            train_main(data.annotated, None, None, cfg, dev=data.dev).best_dev_f1
        )

    full = sum(scores["full"]) / len(scores["full"])
    width = max(len(n) for n in scores)
    print(f"{'variant':<{width}}  mean dev F1  delta")
    for name, values in scores.items():
        m = sum(values) / len(values)
        print(f"{name:<{width}}  {m:>11.4f}  {m - full:+.4f}")
    print(f"({args.seeds} seeds, {time.perf_counter() - started:.1f}s)")


if __name__ == "__main__":
    main()
