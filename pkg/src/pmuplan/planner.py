"""Multi-stage placement planning: exhaustive budget-constrained vs greedy.

Both planners grow a placement on top of a protected base set, one stage per
added sensor, driven by an injected set function ``metric(frozenset) -> float``
that is minimized. The budget-constrained planner re-optimizes from scratch at
every stage by enumerating all k-subsets of the free buses, so earlier picks
carry no weight; the greedy planner keeps its history and appends the single
best bus per stage. Greedy can therefore never beat the exhaustive plan, but
it produces an incremental priority list an operator can actually follow.

Ties are broken deterministically: candidates whose values fall within
``tie_tol`` of the stage minimum form one group, and the lowest bus id
(greedy) or lexicographically smallest addition set (budget) wins.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterable

__all__ = [
    "StageResult",
    "PriorityList",
    "ComparisonRow",
    "PlanComparison",
    "EnumerationCapError",
    "CandidateEvaluationError",
    "greedy_plan",
    "budget_constrained_plan",
    "compare_plans",
    "DEFAULT_ENUM_CAP",
]

DEFAULT_ENUM_CAP = 10_000_000
DEFAULT_TIE_TOL = 1e-9
# slack for the exhaustive-dominates-greedy invariant check
DOMINANCE_TOL = 1e-12


class EnumerationCapError(RuntimeError):
    """Exhaustive stage would exceed the subset-enumeration budget."""

    def __init__(self, candidates: int, cap: int, k: int):
        self.candidates = candidates
        self.cap = cap
        self.k = k
        super().__init__(
            f"budget-constrained stage {k} needs {candidates} subset evaluations, "
            f"over the cap of {cap}; use the greedy planner for problems this size"
        )


class CandidateEvaluationError(RuntimeError):
    """The injected metric failed while scoring one candidate."""

    def __init__(self, stage: int, candidate):
        self.stage = stage
        self.candidate = candidate
        super().__init__(f"metric failed at stage {stage} on candidate {candidate!r}")


@dataclass(frozen=True)
class StageResult:
    """Additions beyond the base after one stage, with the achieved value."""

    stage: int
    selected: tuple[int, ...]
    metric_value: float

    def __post_init__(self) -> None:
        if self.stage < 1:
            raise ValueError("stage numbering starts at 1")
        if len(self.selected) != self.stage:
            raise ValueError("stage k must select exactly k additions")
        if tuple(sorted(set(self.selected))) != self.selected:
            raise ValueError("selected must be a strictly sorted tuple")


@dataclass(frozen=True)
class PriorityList:
    """Greedy output: base set, append order, and the value after each prefix."""

    base: tuple[int, ...]
    order: tuple[int, ...]
    stage_values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise ValueError("priority order must not repeat buses")
        if set(self.base) & set(self.order):
            raise ValueError("priority order must not revisit the base set")
        if len(self.order) != len(self.stage_values):
            raise ValueError("one value per stage required")

    def stage_result(self, stage: int) -> StageResult:
        """Stage-k set is the first k entries of the order, as a sorted set."""
        if not 1 <= stage <= len(self.order):
            raise ValueError(f"stage must be in 1..{len(self.order)}")
        return StageResult(
            stage=stage,
            selected=tuple(sorted(self.order[:stage])),
            metric_value=self.stage_values[stage - 1],
        )

    def to_dict(self) -> dict:
        return {
            "base": list(self.base),
            "order": list(self.order),
            "stage_values": list(self.stage_values),
        }


@dataclass(frozen=True)
class ComparisonRow:
    stage: int
    budget: StageResult
    greedy: StageResult
    greedy_added: int
    sets_differ: bool
    greedy_strictly_worse: bool

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "budget_selected": list(self.budget.selected),
            "budget_value": self.budget.metric_value,
            "greedy_selected": list(self.greedy.selected),
            "greedy_added": self.greedy_added,
            "greedy_value": self.greedy.metric_value,
            "sets_differ": self.sets_differ,
            "greedy_strictly_worse": self.greedy_strictly_worse,
        }


@dataclass(frozen=True)
class PlanComparison:
    """Stage-aligned pairing of both planners over the same base and metric."""

    base: tuple[int, ...]
    rows: tuple[ComparisonRow, ...]
    greedy_order: tuple[int, ...]

    @property
    def differing_stages(self) -> tuple[int, ...]:
        return tuple(r.stage for r in self.rows if r.sets_differ)

    @property
    def strictly_worse_stages(self) -> tuple[int, ...]:
        return tuple(r.stage for r in self.rows if r.greedy_strictly_worse)

    def to_dict(self) -> dict:
        return {
            "base": list(self.base),
            "greedy_order": list(self.greedy_order),
            "rows": [r.to_dict() for r in self.rows],
            "differing_stages": list(self.differing_stages),
            "strictly_worse_stages": list(self.strictly_worse_stages),
        }


def _free_buses(case, nu: Iterable[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    base = tuple(sorted(set(nu)))
    omega = set(case.bus_ids)
    if not set(base) <= omega:
        missing = sorted(set(base) - omega)
        raise ValueError(f"base buses not in the case: {missing}")
    free = tuple(b for b in case.bus_ids if b not in set(base))
    return base, free


def greedy_plan(
    case,
    nu: Iterable[int],
    metric: Callable[[frozenset], float],
    stages: int,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> PriorityList:
    """Append the value-minimizing bus per stage, keeping all prior picks.

    Within a stage, every free bus is scored with the metric on the base
    plus prior picks plus that bus; the tie group around the minimum is
    resolved to the lowest bus id. The recorded stage value is the chosen
    candidate's own evaluation.
    """
    base, free = _free_buses(case, nu)
    if not 0 <= stages <= len(free):
        raise ValueError(f"stages must be in 0..{len(free)}, got {stages}")

    chosen: list[int] = []
    values: list[float] = []
    current = frozenset(base)
    for stage in range(1, stages + 1):
        scored: list[tuple[int, float]] = []
        for candidate in free:
            if candidate in current:
                continue
            try:
                value = float(metric(current | {candidate}))
            except Exception as exc:
                raise CandidateEvaluationError(stage, candidate) from exc
            scored.append((candidate, value))
        vmin = min(v for _, v in scored)
        # candidates are scanned in ascending id order, so the first hit
        # inside the tie band is the lowest-id winner
        winner, winner_value = next(
            (c, v) for c, v in scored if v <= vmin + tie_tol
        )
        chosen.append(winner)
        values.append(winner_value)
        current = current | {winner}

    return PriorityList(base=base, order=tuple(chosen), stage_values=tuple(values))


def budget_constrained_plan(
    case,
    nu: Iterable[int],
    metric: Callable[[frozenset], float],
    k: int,
    enum_cap: int = DEFAULT_ENUM_CAP,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> StageResult:
    """Exhaustively pick the best k additions, ignoring any earlier stages.

    Every k-subset of the free buses is evaluated; the minimum-value subset
    wins, with ties resolved to the lexicographically smallest addition
    tuple. Refuses to start when C(free, k) exceeds ``enum_cap``.
    """
    base, free = _free_buses(case, nu)
    if not 1 <= k <= len(free):
        raise ValueError(f"k must be in 1..{len(free)}, got {k}")
    candidates = comb(len(free), k)
    if candidates > enum_cap:
        raise EnumerationCapError(candidates, enum_cap, k)

    base_set = frozenset(base)
    best_value = float("inf")
    # (combo, value) pairs currently inside the tie band around best_value
    band: list[tuple[tuple[int, ...], float]] = []
    for combo in itertools.combinations(free, k):
        try:
            value = float(metric(base_set | set(combo)))
        except Exception as exc:
            raise CandidateEvaluationError(k, combo) from exc
        if value < best_value - tie_tol:
            best_value = value
            band = [(combo, value)]
            continue
        if value < best_value:
            best_value = value
        if value <= best_value + tie_tol:
            band.append((combo, value))
    # the minimum may have tightened after entries joined the band
    band = [(c, v) for c, v in band if v <= best_value + tie_tol]
    winner, winner_value = min(band, key=lambda cv: cv[0])
    return StageResult(stage=k, selected=winner, metric_value=winner_value)


def compare_plans(
    case,
    nu: Iterable[int],
    metric: Callable[[frozenset], float],
    stages: int,
    enum_cap: int = DEFAULT_ENUM_CAP,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> PlanComparison:
    """Run both planners stage by stage and flag where greedy falls behind.

    Raises if the exhaustive plan ever scores worse than greedy beyond
    floating-point slack; that would mean the injected metric is not a
    function of the placement set.
    """
    if stages < 1:
        raise ValueError("comparison needs at least one stage")
    base = tuple(sorted(set(nu)))
    greedy = greedy_plan(case, nu, metric, stages, tie_tol=tie_tol)
    rows = []
    for stage in range(1, stages + 1):
        budget = budget_constrained_plan(
            case, nu, metric, stage, enum_cap=enum_cap, tie_tol=tie_tol
        )
        gres = greedy.stage_result(stage)
        if budget.metric_value > gres.metric_value + DOMINANCE_TOL:
            raise RuntimeError(
                f"exhaustive stage {stage} scored worse than greedy; "
                f"the metric is not deterministic over placements"
            )
        rows.append(
            ComparisonRow(
                stage=stage,
                budget=budget,
                greedy=gres,
                greedy_added=greedy.order[stage - 1],
                sets_differ=set(budget.selected) != set(gres.selected),
                greedy_strictly_worse=gres.metric_value
                > budget.metric_value + tie_tol,
            )
        )
    return PlanComparison(base=base, rows=tuple(rows), greedy_order=greedy.order)
