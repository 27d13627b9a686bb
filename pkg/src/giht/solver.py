"""Iterative hard thresholding with pluggable structured projections.

The loop alternates a fixed-step gradient move with a projection onto the
group-sparse (or sparse-overlapping-group) constraint set, optionally
followed by a least-squares refit on the projected support ("full
corrections").  Everything is deterministic given the config.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .groups import GroupLayout, GroupSupport
from .objective import RegressionProblem, estimate_step_size
from .project import (
    SogBudget,
    exact_project_bruteforce,
    exact_project_disjoint,
    greedy_project,
    sog_greedy_project,
)

__all__ = [
    "DivergenceError",
    "IhtConfig",
    "IhtTrace",
    "iht_solve",
    "fully_correct",
    "theoretical_budget",
    "trace_to_csv",
    "trace_summary",
]

PROJECTORS = ("greedy", "exact_disjoint", "bruteforce", "sog")


class DivergenceError(RuntimeError):
    """Iterates blew up to non-finite values, typically a too-large step size."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class IhtConfig:
    """Solver hyperparameters.

    ``budget`` is the group budget k, or a SogBudget (k1, k2) when
    ``projector`` is "sog".  ``eta`` is the gradient step size, "auto" for
    the conservative 1/(4 lambda_max) rule, or "auto-max" for the
    aggressive 1/lambda_max rule (both least squares only).  Stopping is
    the iteration cap plus an iterate-change threshold.
    """

    budget: int | SogBudget
    eta: float | str = "auto"
    max_iters: int = 500
    tol: float = 1e-10
    full_corrections: bool = False
    projector: str = "greedy"
    seed: int = 0
    init: np.ndarray | None = None
    allow_partial_cover: bool = False
    bruteforce_max_m: int = 20


@dataclass(eq=False)
class IhtTrace:
    """Per-iteration history of a solve."""

    objective_values: np.ndarray
    iterate_change: np.ndarray
    support_history: list[GroupSupport]
    error_to_reference: np.ndarray | None
    iterations_run: int
    converged: bool


def _resolve_projector(config: IhtConfig, layout: GroupLayout):
    name = config.projector
    if name not in PROJECTORS:
        raise ValueError(f"unknown projector {name!r}; expected one of {PROJECTORS}")
    if name == "sog":
        if not isinstance(config.budget, SogBudget):
            raise ValueError("sog projector needs a SogBudget budget")
        budget = config.budget
        if budget.k1 > layout.M:
            raise ValueError(f"k1={budget.k1} exceeds group count M={layout.M}")
        return lambda g: sog_greedy_project(g, budget, layout)
    if isinstance(config.budget, SogBudget):
        raise ValueError(f"{name} projector needs an integer group budget")
    k = int(config.budget)
    if not 1 <= k <= layout.M:
        raise ValueError(f"group budget must be in [1, {layout.M}], got {k}")
    if name == "greedy":
        return lambda g: greedy_project(g, k, layout)
    if name == "exact_disjoint":
        return lambda g: exact_project_disjoint(g, k, layout)
    return lambda g: exact_project_bruteforce(g, k, layout, max_M=config.bruteforce_max_m)


def _refit_coords(outcome) -> np.ndarray:
    if outcome.within_group_support is not None:
        mask_coords = np.unique(np.concatenate(list(outcome.within_group_support.values())))
        return mask_coords
    return outcome.selected.coords


def iht_solve(
    obj,
    layout: GroupLayout,
    config: IhtConfig,
    reference: np.ndarray | None = None,
) -> tuple[np.ndarray, IhtTrace]:
    """Run projected gradient descent with hard-thresholding projections.

    Returns the final iterate and a complete trace.  When ``reference`` is
    given, the per-iteration distance to it is recorded as well.  Raises
    DivergenceError (naming the iteration) if the objective or gradient
    stops being finite, which signals a too-large step size.
    """
    if obj.p != layout.p:
        raise ValueError(f"objective has p={obj.p} but layout has p={layout.p}")
    if not layout.covers_ambient and not config.allow_partial_cover:
        raise ValueError(
            "layout does not cover all coordinates; pass allow_partial_cover=True "
            "to solve anyway (uncovered coordinates stay zero)"
        )
    if config.max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {config.max_iters}")
    if config.tol < 0:
        raise ValueError(f"tol must be >= 0, got {config.tol}")
    project = _resolve_projector(config, layout)

    if config.eta in ("auto", "auto-max"):
        problem = getattr(obj, "problem", None)
        if not isinstance(problem, RegressionProblem):
            raise ValueError('eta="auto" needs a least-squares objective with a .problem')
        estimate = estimate_step_size(problem)
        eta = estimate.eta if config.eta == "auto" else 1.0 / estimate.lambda_max
    else:
        eta = float(config.eta)
        if not eta > 0:
            raise ValueError(f"eta must be positive, got {eta}")

    if config.init is None:
        w = np.zeros(layout.p)
    else:
        w = np.asarray(config.init, dtype=float).copy()
        if w.shape != (layout.p,):
            raise ValueError(f"init must have length {layout.p}, got shape {w.shape}")

    if config.full_corrections and not isinstance(getattr(obj, "problem", None), RegressionProblem):
        raise ValueError("full corrections are defined for least-squares objectives only")

    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != (layout.p,):
            raise ValueError(f"reference must have length {layout.p}")

    objective_values: list[float] = []
    iterate_change: list[float] = []
    support_history: list[GroupSupport] = []
    ref_errors: list[float] = []
    converged = False
    iterations = 0

    for t in range(1, config.max_iters + 1):
        grad = obj.gradient(w)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(
                f"non-finite gradient at iteration {t}; step size {eta} is too large", t
            )
        outcome = project(w - eta * grad)
        w_next = outcome.u
        if config.full_corrections:
            w_next = fully_correct(obj.problem, _refit_coords(outcome))
        f_val = obj.value(w_next)
        if not math.isfinite(f_val):
            raise DivergenceError(
                f"non-finite objective at iteration {t}; step size {eta} is too large", t
            )
        change = float(np.linalg.norm(w_next - w))
        objective_values.append(f_val)
        iterate_change.append(change)
        support_history.append(outcome.selected)
        if reference is not None:
            ref_errors.append(float(np.linalg.norm(w_next - reference)))
        w = w_next
        iterations = t
        if change <= config.tol:
            converged = True
            break

    trace = IhtTrace(
        objective_values=np.array(objective_values),
        iterate_change=np.array(iterate_change),
        support_history=support_history,
        error_to_reference=np.array(ref_errors) if reference is not None else None,
        iterations_run=iterations,
        converged=converged,
    )
    return w, trace


def fully_correct(problem: RegressionProblem, support) -> np.ndarray:
    """Least-squares refit restricted to a coordinate support.

    Solves the restricted normal equations by Cholesky factorization, with
    a tiny ridge retry when the restricted Gram matrix is numerically
    singular.  An empty support returns the zero vector.
    """
    support = np.asarray(support, dtype=np.int64)
    w = np.zeros(problem.p)
    if support.size == 0:
        return w
    if support.min() < 0 or support.max() >= problem.p:
        raise ValueError(f"support indices out of range [0, {problem.p})")
    support = np.unique(support)
    Xs = problem.X[:, support]
    gram = Xs.T @ Xs / problem.n
    rhs = Xs.T @ problem.y / problem.n
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=False)
        ws = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except scipy.linalg.LinAlgError:
        ridge = gram + 1e-10 * np.eye(support.size)
        factor = scipy.linalg.cho_factor(ridge, check_finite=False)
        ws = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    w[support] = ws
    return w


def theoretical_budget(
    kappa: float, k_star: int, epsilon: float, general: bool = False
) -> int:
    """Group budget from the convergence analysis: ceil(8 kappa^2 k* log(kappa/eps)).

    ``general=True`` switches to the conservative 32-constant rule used for
    generic smooth objectives (with kappa read as the smoothness-to-
    convexity ratio).  The result is clamped below at k*.
    """
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if k_star < 1:
        raise ValueError(f"k_star must be >= 1, got {k_star}")
    c = 32.0 if general else 8.0
    raw = c * kappa**2 * k_star * math.log(kappa / epsilon)
    # Tolerant ceiling: absorb float rounding in log/products at exact values.
    return max(k_star, math.ceil(raw - 1e-9))


def trace_to_csv(trace: IhtTrace, path) -> None:
    """Write the per-iteration history as CSV.

    Columns: iteration, objective, iterate_change, error_to_reference
    (blank when no reference was supplied), n_groups.
    """
    with open(path, "w", newline="") as fh:
        fh.write("iteration,objective,iterate_change,error_to_reference,n_groups\n")
        for i in range(trace.iterations_run):
            err = (
                f"{trace.error_to_reference[i]:.17g}"
                if trace.error_to_reference is not None
                else ""
            )
            fh.write(
                f"{i + 1},{trace.objective_values[i]:.17g},"
                f"{trace.iterate_change[i]:.17g},{err},"
                f"{trace.support_history[i].size}\n"
            )


def trace_summary(
    trace: IhtTrace,
    final_rel_error: float | None = None,
    wall_time_ms: float | None = None,
) -> dict:
    """JSON-ready summary of a finished solve."""
    return {
        "final_rel_error": final_rel_error,
        "iterations": trace.iterations_run,
        "wall_time_ms": wall_time_ms,
        "objective": float(trace.objective_values[-1]),
        "converged": trace.converged,
    }


def trace_summary_json(trace: IhtTrace, **kwargs) -> str:
    return json.dumps(trace_summary(trace, **kwargs), indent=2, sort_keys=True)
