"""Sequential-investment toy model: exhaustive 0/1 knapsack vs greedy growth.

The placement planners and this module share one storyline at different
scales. The exhaustive solver re-optimizes from scratch for each budget and
may discard earlier picks as the budget grows; the greedy process models an
investor who commits as soon as anything becomes affordable and never sells.
Budget sweeps turn either policy into a breakpoint table: one row per
interval of budgets sharing the same selection.

Greedy here means growth semantics: the budget rises continuously from zero
and, at each moment something fits the uncommitted remainder, the
highest-value fitting item is bought. Since an item fits the instant the
remainder reaches its weight, the items that fit at a trigger point are
exactly the minimum-weight remaining ones, so the rule resolves to: buy the
lightest remaining item (highest value, then lowest index, on equal
weights) whenever the budget allows it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

__all__ = [
    "KnapsackInstance",
    "BudgetBreakpointRow",
    "BudgetBreakpointTable",
    "ItemLimitError",
    "example_instance",
    "optimal_solve",
    "greedy_solve",
    "budget_sweep",
    "MAX_EXHAUSTIVE_ITEMS",
]

MAX_EXHAUSTIVE_ITEMS = 25


class ItemLimitError(RuntimeError):
    """Instance has too many items for exhaustive subset enumeration."""

    def __init__(self, n: int):
        self.n = n
        super().__init__(
            f"{n} items cannot be enumerated exhaustively "
            f"(limit {MAX_EXHAUSTIVE_ITEMS})"
        )


@dataclass(frozen=True)
class KnapsackInstance:
    values: tuple[float, ...]
    weights: tuple[float, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("instance needs at least one item")
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights must have equal length")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(f"x{i + 1}" for i in range(len(self.values)))
            )
        elif len(self.labels) != len(self.values):
            raise ValueError("one label per item required")

    @property
    def n(self) -> int:
        return len(self.values)

    def label_items(self, items: tuple[int, ...]) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in items)


def example_instance() -> KnapsackInstance:
    """The four-item instance used throughout the documentation and tests."""
    return KnapsackInstance(values=(7.0, 5.0, 4.0, 1.0), weights=(4.0, 2.0, 3.0, 6.0))


@dataclass(frozen=True)
class BudgetBreakpointRow:
    """One budget interval [lo, hi) with its selection and objective."""

    lo: float
    hi: float
    items: tuple[int, ...]
    objective: float


@dataclass(frozen=True)
class BudgetBreakpointTable:
    method: str
    rows: tuple[BudgetBreakpointRow, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("breakpoint table cannot be empty")
        if self.rows[0].lo != 0.0:
            raise ValueError("intervals must start at budget 0")
        if not math.isinf(self.rows[-1].hi):
            raise ValueError("last interval must be unbounded")
        for left, right in zip(self.rows, self.rows[1:]):
            if left.hi != right.lo:
                raise ValueError("intervals must tile [0, inf) without gaps")
            if right.objective < left.objective:
                raise ValueError("objective must be non-decreasing in budget")

    def to_dict(self, instance: KnapsackInstance | None = None) -> dict:
        rows = []
        for r in self.rows:
            row = {
                "lo": r.lo,
                "hi": None if math.isinf(r.hi) else r.hi,
                "items": list(r.items),
                "objective": r.objective,
            }
            if instance is not None:
                row["labels"] = list(instance.label_items(r.items))
            rows.append(row)
        return {"method": self.method, "rows": rows}


def _check_enumerable(instance: KnapsackInstance) -> None:
    if instance.n > MAX_EXHAUSTIVE_ITEMS:
        raise ItemLimitError(instance.n)


def optimal_solve(
    instance: KnapsackInstance, budget: float
) -> tuple[tuple[int, ...], float]:
    """Exact optimum by enumerating all 2^n subsets.

    Returns (sorted item indices, objective). Value ties go to the
    lexicographically smallest index tuple, so outputs are reproducible.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    _check_enumerable(instance)
    best_items: tuple[int, ...] = ()
    best_value = 0.0
    for r in range(1, instance.n + 1):
        for combo in itertools.combinations(range(instance.n), r):
            if sum(instance.weights[i] for i in combo) > budget:
                continue
            value = sum(instance.values[i] for i in combo)
            if value > best_value or (value == best_value and combo < best_items):
                best_items = combo
                best_value = value
    return best_items, best_value


def greedy_solve(
    instance: KnapsackInstance, budget: float
) -> tuple[tuple[int, ...], float]:
    """Growth-semantics greedy: commit items as the budget reaches them.

    Returns (items in purchase order, objective). The purchase order is a
    fixed property of the instance; the budget only decides how long a
    prefix of it gets bought.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    picked: list[int] = []
    spent = 0.0
    remaining = set(range(instance.n))
    while remaining:
        wmin = min(instance.weights[i] for i in remaining)
        if spent + wmin > budget:
            break
        group = sorted(i for i in remaining if instance.weights[i] == wmin)
        # max() keeps the first maximum, so the lowest index wins value ties
        pick = max(group, key=lambda i: instance.values[i])
        picked.append(pick)
        remaining.remove(pick)
        spent += instance.weights[pick]
    return tuple(picked), float(sum(instance.values[i] for i in picked))


def budget_sweep(instance: KnapsackInstance, method: str) -> BudgetBreakpointTable:
    """Exact breakpoint table for a policy: one row per selection regime.

    Either policy's selection can only change where some subset's total
    weight sits, so evaluating at every subset sum and merging runs of
    identical solutions yields the exact intervals. Cost is exponential in
    the item count; the exhaustive-enumeration guard applies.
    """
    if method == "optimal":
        solve = optimal_solve
    elif method == "greedy":
        solve = greedy_solve
    else:
        raise ValueError(f"unknown method {method!r}, expected 'optimal' or 'greedy'")
    _check_enumerable(instance)

    sums = {0.0}
    for r in range(1, instance.n + 1):
        for combo in itertools.combinations(range(instance.n), r):
            sums.add(float(sum(instance.weights[i] for i in combo)))

    rows: list[BudgetBreakpointRow] = []
    for b in sorted(sums):
        items, objective = solve(instance, b)
        if rows and rows[-1].items == items and rows[-1].objective == objective:
            continue
        if rows:
            rows[-1] = BudgetBreakpointRow(
                lo=rows[-1].lo, hi=b, items=rows[-1].items, objective=rows[-1].objective
            )
        rows.append(BudgetBreakpointRow(lo=b, hi=math.inf, items=items, objective=objective))
    return BudgetBreakpointTable(method=method, rows=tuple(rows))
