"""Back-of-envelope training cost accounting for selection pipelines.

Cost is measured in epoch-documents: one pass of one model over one unit
of data. A pipeline is a sequence of stages, each a training run (size x
epochs) or a single inference sweep (size x 1); its cost is the plain sum.
Sizes are expressed relative to the annotated set, so the annotated-only
baseline with k epochs costs exactly k.

A selection pipeline of expert training (k1 epochs on the annotated set of
size m), one expert sweep over the distant corpus (size M), and main
training (k2 epochs on annotated plus the selected augmentation of size
m_A) therefore costs (k1 + k2) * m + k2 * m_A + M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

STAGE_KINDS = ("train", "inference")


@dataclass(frozen=True)
class Stage:
    name: str
    kind: str
    data_size: float
    epochs: int = 1

    def __post_init__(self) -> None:
        if self.kind not in STAGE_KINDS:
            raise ValueError(f"stage kind must be one of {STAGE_KINDS}, got {self.kind!r}")
        if self.data_size <= 0:
            raise ValueError("data_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.kind == "inference" and self.epochs != 1:
            raise ValueError("an inference stage is a single sweep (epochs must be 1)")

    @property
    def cost(self) -> float:
        return self.data_size * self.epochs


@dataclass(frozen=True)
class PipelinePlan:
    name: str
    stages: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError(f"plan {self.name!r} has no stages")


def estimate_cost(plan: PipelinePlan) -> float:
    return sum(stage.cost for stage in plan.stages)


def cost_ratio(plan: PipelinePlan, baseline: PipelinePlan) -> float:
    base = estimate_cost(baseline)
    if base <= 0:
        raise ValueError("baseline plan has zero cost")
    return estimate_cost(plan) / base


def relative_cost(plan: PipelinePlan, baseline: PipelinePlan) -> str:
    """Cost multiplier vs the baseline as a rounded "Nx" string."""
    return format_relative(cost_ratio(plan, baseline))


def format_relative(ratio: float) -> str:
    """Nearest-integer multiplier, halves rounding up: 4.1 -> "4x"."""
    return f"{int(math.floor(ratio + 0.5))}x"


def selection_plan(name: str, expert_epochs: int, main_epochs: int,
                   annotated_size: float, augmented_size: float,
                   ds_size: float) -> PipelinePlan:
    """Expert training, one scoring sweep over the distant corpus, then
    main training over the annotated set and the selected augmentation
    (two stages of the same run, so cost stays additive per data source).
    Closed form: (k1 + k2) * m + k2 * m_A + M.
    """
    return PipelinePlan(
        name=name,
        stages=(
            Stage("expert-train", "train", annotated_size, expert_epochs),
            Stage("expert-sweep", "inference", ds_size, 1),
            Stage("main-train-annotated", "train", annotated_size, main_epochs),
            Stage("main-train-augmentation", "train", augmented_size, main_epochs),
        ),
    )


def bundled_plans() -> dict:
    """Reference pipelines at the corpus proportions of the motivating
    setting: distant corpus 33x the annotated set, 30-epoch runs, and
    augmentation sets of 1x (3 percent of the distant corpus) or 10x
    (30 percent)."""
    m, big = 1.0, 33.0
    plans = [
        PipelinePlan("annotated-only", (Stage("main-train", "train", m, 30),)),
        PipelinePlan(
            "full-ds-pretrain",
            (
                Stage("ds-pretrain", "train", big, 30),
                Stage("finetune", "train", m, 30),
            ),
        ),
        selection_plan("selective-3pct", 30, 30, m, 1.0, big),
        selection_plan("selective-30pct", 30, 30, m, 10.0, big),
    ]
    return {plan.name: plan for plan in plans}


def cost_table(plans: dict, baseline_name: str = "annotated-only") -> list:
    """Rows (name, cost, ratio, label) sorted by cost ascending."""
    baseline = plans[baseline_name]
    rows = []
    for plan in plans.values():
        ratio = cost_ratio(plan, baseline)
        rows.append((plan.name, estimate_cost(plan), ratio, format_relative(ratio)))
    rows.sort(key=lambda row: (row[1], row[0]))
    return rows
