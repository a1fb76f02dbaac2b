"""Epoch-document cost accounting for the selection pipeline."""

import pytest

from multisup.costmodel import (
    PipelinePlan,
    Stage,
    bundled_plans,
    cost_ratio,
    cost_table,
    estimate_cost,
    format_relative,
    relative_cost,
    selection_plan,
)


class TestStage:
    def test_cost_is_size_times_epochs(self):
        assert Stage("t", "train", data_size=200, epochs=30).cost == 6000
        assert Stage("i", "inference", data_size=2000).cost == 2000

    def test_validation(self):
        with pytest.raises(ValueError):
            Stage("t", "train", data_size=0, epochs=1)
        with pytest.raises(ValueError):
            Stage("t", "train", data_size=10, epochs=0)
        with pytest.raises(ValueError):
            Stage("i", "inference", data_size=10, epochs=2)
        with pytest.raises(ValueError):
            Stage("t", "lunch", data_size=10, epochs=1)

    def test_plan_rejects_empty(self):
        with pytest.raises(ValueError):
            PipelinePlan(name="nothing", stages=())


class TestSelectionPlan:
    def test_stage_arithmetic(self):
        """(k1 + k2) m + k2 m_A + M with unit per-document cost."""
        plan = selection_plan("sel", expert_epochs=30, main_epochs=30,
                              annotated_size=1, augmented_size=10, ds_size=33)
        assert len(plan.stages) == 4
        assert estimate_cost(plan) == (30 + 30) * 1 + 30 * 10 + 33
        kinds = [s.kind for s in plan.stages]
        assert kinds == ["train", "inference", "train", "train"]

    def test_three_percent_shape(self):
        plan = selection_plan("sel3", expert_epochs=30, main_epochs=30,
                              annotated_size=1, augmented_size=1, ds_size=33)
        assert estimate_cost(plan) == 123


class TestBundledPlans:
    def test_reference_costs(self):
        plans = bundled_plans()
        costs = {name: estimate_cost(p) for name, p in plans.items()}
        assert costs["annotated-only"] == 30
        assert costs["full-ds-pretrain"] == 1020
        assert costs["selective-3pct"] == 123
        assert costs["selective-30pct"] == 393

    def test_reference_labels(self):
        plans = bundled_plans()
        base = plans["annotated-only"]
        labels = {name: relative_cost(p, base) for name, p in plans.items()}
        assert labels["annotated-only"] == "1x"
        assert labels["full-ds-pretrain"] == "34x"
        assert labels["selective-3pct"] == "4x"
        assert labels["selective-30pct"] == "13x"


class TestRelativeCost:
    def test_ratio(self):
        a = PipelinePlan("a", (Stage("t", "train", 10, 3),))
        b = PipelinePlan("b", (Stage("t", "train", 10, 1),))
        assert cost_ratio(a, b) == 3.0
        assert relative_cost(a, b) == "3x"

    def test_rounding_convention(self):
        # half rounds up, below half rounds down
        assert format_relative(3.5) == "4x"
        assert format_relative(3.49) == "3x"
        assert format_relative(2.5) == "3x"
        assert format_relative(13.1) == "13x"
        assert format_relative(0.4) == "0x"

    def test_identical_plans_ratio_one(self):
        a = PipelinePlan("a", (Stage("t", "train", 10, 3),))
        assert cost_ratio(a, a) == 1.0
        assert relative_cost(a, a) == "1x"


class TestCostTable:
    def test_sorted_with_labels(self):
        plans = bundled_plans()
        rows = cost_table(plans, baseline_name="annotated-only")
        assert [r[0] for r in rows] == ["annotated-only", "selective-3pct",
                                        "selective-30pct", "full-ds-pretrain"]
        assert [r[1] for r in rows] == [30, 123, 393, 1020]
        assert [r[3] for r in rows] == ["1x", "4x", "13x", "34x"]

    def test_unknown_baseline(self):
        with pytest.raises(KeyError):
            cost_table(bundled_plans(), baseline_name="mystery")
