"""Phasor sensor placement planning and submodularity auditing toolkit."""

from .cases import load_case
from .estimation import (
    CovarianceModel,
    Jacobian,
    SensitivityReport,
    StateScope,
    UnobservableStateError,
    build_jacobian,
    diag_metrics,
    metric_function,
    placement_metric,
    projection_matrix,
    sensitivity_matrix,
    sensitivity_report,
    wls_estimate,
)
from .knapsack import (
    BudgetBreakpointTable,
    ItemLimitError,
    KnapsackInstance,
    budget_sweep,
    example_instance,
    greedy_solve,
    optimal_solve,
)
from .measurements import (
    ChannelKind,
    ChannelLimitError,
    MeasurementChannel,
    MeasurementSet,
    PmuPlacement,
    enumerate_channels,
    greedy_observable_cover,
    observability_check,
)
from .network import (
    Branch,
    Bus,
    CaseFormatError,
    NetworkCase,
    parse_case,
    serialize_case,
)
from .planner import (
    CandidateEvaluationError,
    EnumerationCapError,
    PlanComparison,
    PriorityList,
    StageResult,
    budget_constrained_plan,
    compare_plans,
    greedy_plan,
)
from .submodularity import (
    AuditAbortedError,
    ClassificationTally,
    MarginClass,
    MarginRecord,
    SubsetTriple,
    audit,
    check_monotone,
    classify_triple,
    count_combinations,
    enumerate_triples,
)

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "Bus",
    "CaseFormatError",
    "NetworkCase",
    "load_case",
    "parse_case",
    "serialize_case",
    "ChannelKind",
    "ChannelLimitError",
    "MeasurementChannel",
    "MeasurementSet",
    "PmuPlacement",
    "enumerate_channels",
    "greedy_observable_cover",
    "observability_check",
    "CovarianceModel",
    "Jacobian",
    "SensitivityReport",
    "StateScope",
    "UnobservableStateError",
    "build_jacobian",
    "diag_metrics",
    "metric_function",
    "placement_metric",
    "projection_matrix",
    "sensitivity_matrix",
    "sensitivity_report",
    "wls_estimate",
    "AuditAbortedError",
    "ClassificationTally",
    "MarginClass",
    "MarginRecord",
    "SubsetTriple",
    "audit",
    "check_monotone",
    "classify_triple",
    "count_combinations",
    "enumerate_triples",
    "CandidateEvaluationError",
    "EnumerationCapError",
    "PlanComparison",
    "PriorityList",
    "StageResult",
    "budget_constrained_plan",
    "compare_plans",
    "greedy_plan",
    "BudgetBreakpointTable",
    "ItemLimitError",
    "KnapsackInstance",
    "budget_sweep",
    "example_instance",
    "greedy_solve",
    "optimal_solve",
    "__version__",
]
