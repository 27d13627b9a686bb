"""Iterative hard thresholding for regression under overlapping group
sparsity, with greedy submodular projections and synthetic experiments."""

from .groups import (
    GroupLayout,
    GroupSupport,
    InfeasibleError,
    MaxSupportEstimate,
    coverage_energy,
    group_l0_bruteforce,
    group_support,
    layout_from_json,
    layout_is_disjoint,
    layout_to_json,
    make_layout,
    max_support_size,
    validate_layout,
)
from .objective import (
    LeastSquaresObjective,
    RegressionProblem,
    RestrictedSpectrumEstimate,
    StepSizeEstimate,
    check_gradient,
    estimate_restricted_spectrum,
    estimate_step_size,
    least_squares_gradient,
    least_squares_value,
)
from .project import (
    ProjectionOutcome,
    SogBudget,
    exact_project_bruteforce,
    exact_project_disjoint,
    greedy_project,
    sog_greedy_project,
)
from .solver import (
    DivergenceError,
    IhtConfig,
    IhtTrace,
    fully_correct,
    iht_solve,
    theoretical_budget,
    trace_to_csv,
)
from .synth import (
    CovarianceModel,
    SynthInstance,
    SynthSpec,
    contiguous_layout,
    generate,
    load_instance,
    make_covariance,
    save_instance,
)

__version__ = "0.1.0"

__all__ = [
    "GroupLayout",
    "GroupSupport",
    "InfeasibleError",
    "MaxSupportEstimate",
    "coverage_energy",
    "group_l0_bruteforce",
    "group_support",
    "layout_from_json",
    "layout_is_disjoint",
    "layout_to_json",
    "make_layout",
    "max_support_size",
    "validate_layout",
    "LeastSquaresObjective",
    "RegressionProblem",
    "RestrictedSpectrumEstimate",
    "StepSizeEstimate",
    "check_gradient",
    "estimate_restricted_spectrum",
    "estimate_step_size",
    "least_squares_gradient",
    "least_squares_value",
    "ProjectionOutcome",
    "SogBudget",
    "exact_project_bruteforce",
    "exact_project_disjoint",
    "greedy_project",
    "sog_greedy_project",
    "DivergenceError",
    "IhtConfig",
    "IhtTrace",
    "fully_correct",
    "iht_solve",
    "theoretical_budget",
    "trace_to_csv",
    "CovarianceModel",
    "SynthInstance",
    "SynthSpec",
    "contiguous_layout",
    "generate",
    "load_instance",
    "make_covariance",
    "save_instance",
]
