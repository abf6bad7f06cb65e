from fractions import Fraction

import pytest

from pmuplan.estimation import metric_function
from pmuplan.network import Branch, Bus, NetworkCase
from pmuplan.planner import (
    CandidateEvaluationError,
    EnumerationCapError,
    PriorityList,
    StageResult,
    budget_constrained_plan,
    compare_plans,
    greedy_plan,
)

NU = (2, 6, 7, 9)

# frozen from the branch-counting closed form avg = br(Q) / (|Q| + br(Q)):
# each stage value below was computed by hand from the 14-bus line list
GREEDY_ORDER = (8, 1, 3, 4, 5, 10, 11, 12, 13, 14)
GREEDY_VALUES = (
    Fraction(14, 19),
    Fraction(5, 7),
    Fraction(16, 23),
    Fraction(17, 25),
    Fraction(17, 26),
    Fraction(9, 14),
    Fraction(18, 29),
    Fraction(19, 31),
    Fraction(20, 33),
    Fraction(10, 17),
)
BUDGET_SETS = (
    (8,),
    (1, 8),
    (8, 10, 11),
    (1, 8, 10, 11),
    (1, 3, 4, 5, 8),
    (8, 10, 11, 12, 13, 14),
    (1, 3, 4, 5, 8, 10, 11),
    (1, 3, 4, 5, 8, 10, 11, 12),
    (1, 3, 4, 5, 8, 10, 11, 12, 13),
    (1, 3, 4, 5, 8, 10, 11, 12, 13, 14),
)
BUDGET_VALUES = (
    Fraction(14, 19),
    Fraction(5, 7),
    Fraction(15, 22),
    Fraction(2, 3),
    Fraction(17, 26),
    Fraction(17, 27),
    Fraction(18, 29),
    Fraction(19, 31),
    Fraction(20, 33),
    Fraction(10, 17),
)


@pytest.fixture
def score(ieee14):
    return metric_function(ieee14)


def test_greedy_reference_plan(ieee14, score):
    plan = greedy_plan(ieee14, NU, score, stages=10)
    assert plan.base == NU
    assert plan.order == GREEDY_ORDER
    for got, want in zip(plan.stage_values, GREEDY_VALUES):
        assert got == pytest.approx(float(want), abs=1e-12)


def test_greedy_prefixes_are_stable(ieee14, score):
    short = greedy_plan(ieee14, NU, score, stages=4)
    full = greedy_plan(ieee14, NU, score, stages=10)
    assert short.order == full.order[:4]
    assert short.stage_values == full.stage_values[:4]


def test_budget_reference_sets_and_values(ieee14, score):
    for k, (want_set, want_value) in enumerate(zip(BUDGET_SETS, BUDGET_VALUES), start=1):
        result = budget_constrained_plan(ieee14, NU, score, k)
        assert result.stage == k
        assert result.selected == want_set
        assert result.metric_value == pytest.approx(float(want_value), abs=1e-12)


def test_comparison_flags_and_dominance(ieee14, score):
    cmp = compare_plans(ieee14, NU, score, stages=10)
    assert cmp.greedy_order == GREEDY_ORDER
    assert cmp.differing_stages == (3, 4, 6)
    assert cmp.strictly_worse_stages == (3, 4, 6)
    for row in cmp.rows:
        assert row.budget.metric_value <= row.greedy.metric_value + 1e-12
        assert row.greedy_added == GREEDY_ORDER[row.stage - 1]
    # final stages must coincide: both plans hold every free bus
    last = cmp.rows[-1]
    assert last.budget.selected == last.greedy.selected
    assert not last.sets_differ


def test_comparison_serialization(ieee14, score):
    cmp = compare_plans(ieee14, NU, score, stages=2)
    d = cmp.to_dict()
    assert d["base"] == [2, 6, 7, 9]
    assert d["greedy_order"] == [8, 1]
    assert [r["stage"] for r in d["rows"]] == [1, 2]
    assert set(d["rows"][0]) == {
        "stage",
        "budget_selected",
        "budget_value",
        "greedy_selected",
        "greedy_added",
        "greedy_value",
        "sets_differ",
        "greedy_strictly_worse",
    }
    again = compare_plans(ieee14, NU, metric_function(ieee14), stages=2)
    assert again.to_dict() == d


def test_stage_bounds(ieee14, score):
    assert greedy_plan(ieee14, NU, score, stages=0).order == ()
    with pytest.raises(ValueError, match="stages"):
        greedy_plan(ieee14, NU, score, stages=11)
    with pytest.raises(ValueError, match="k must be"):
        budget_constrained_plan(ieee14, NU, score, 0)
    with pytest.raises(ValueError, match="k must be"):
        budget_constrained_plan(ieee14, NU, score, 11)
    with pytest.raises(ValueError, match="at least one"):
        compare_plans(ieee14, NU, score, stages=0)


def test_enumeration_cap_suggests_greedy(ieee14, score):
    with pytest.raises(EnumerationCapError, match="greedy planner") as err:
        budget_constrained_plan(ieee14, NU, score, 5, enum_cap=100)
    assert err.value.candidates == 252
    assert err.value.cap == 100
    assert err.value.k == 5


def test_metric_failures_name_the_candidate(ieee14):
    def flaky(q):
        if 8 in q:
            raise RuntimeError("boom")
        return float(len(q))

    with pytest.raises(CandidateEvaluationError) as err:
        greedy_plan(ieee14, NU, flaky, stages=1)
    assert err.value.stage == 1
    assert err.value.candidate == 8
    with pytest.raises(CandidateEvaluationError):
        budget_constrained_plan(ieee14, NU, flaky, 2)


def test_all_tied_metric_falls_back_to_ids():
    path = NetworkCase(
        name="path5",
        buses=tuple(Bus(i) for i in range(1, 6)),
        branches=tuple(Branch(i, i + 1, 0.0, 1.0) for i in range(1, 5)),
    )
    flat = lambda q: 1.0
    plan = greedy_plan(path, (3,), flat, stages=4)
    assert plan.order == (1, 2, 4, 5)
    picked = budget_constrained_plan(path, (3,), flat, 2)
    assert picked.selected == (1, 2)


def test_result_validation():
    with pytest.raises(ValueError, match="exactly k"):
        StageResult(stage=2, selected=(1,), metric_value=0.0)
    with pytest.raises(ValueError, match="sorted"):
        StageResult(stage=2, selected=(2, 1), metric_value=0.0)
    with pytest.raises(ValueError, match="repeat"):
        PriorityList(base=(1,), order=(2, 2), stage_values=(0.0, 0.0))
    with pytest.raises(ValueError, match="revisit"):
        PriorityList(base=(1,), order=(1, 2), stage_values=(0.0, 0.0))
    plan = PriorityList(base=(9,), order=(4, 2), stage_values=(0.5, 0.25))
    assert plan.stage_result(2).selected == (2, 4)
    with pytest.raises(ValueError, match="stage"):
        plan.stage_result(3)


def test_unknown_base_bus_rejected(ieee14, score):
    with pytest.raises(ValueError):
        greedy_plan(ieee14, (2, 99), score, stages=1)
