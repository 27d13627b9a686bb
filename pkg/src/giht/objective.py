"""Smooth objectives for group-sparse regression, plus spectrum diagnostics.

Only the least-squares loss ships here; anything exposing ``value``,
``gradient`` and ``p`` plugs into the solver the same way.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import GroupLayout, group_support

__all__ = [
    "RegressionProblem",
    "LeastSquaresObjective",
    "RestrictedSpectrumEstimate",
    "StepSizeEstimate",
    "least_squares_value",
    "least_squares_gradient",
    "check_gradient",
    "estimate_restricted_spectrum",
    "estimate_step_size",
    "problem_to_csv",
    "problem_from_csv",
]


@dataclass(eq=False)
class RegressionProblem:
    """A dense regression instance: one sample per row of X, response y."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ValueError(f"X must be a matrix, got ndim={self.X.ndim}")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError(
                f"y must have one entry per row of X: X is {self.X.shape}, "
                f"y is {self.y.shape}"
            )
        if self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError(f"degenerate problem shape {self.X.shape}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("X and y must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def least_squares_value(problem: RegressionProblem, w: np.ndarray) -> float:
    """Mean squared residual, halved: ||y - Xw||^2 / (2n)."""
    w = _check_w(problem, w)
    r = problem.y - problem.X @ w
    return float(r @ r) / (2.0 * problem.n)


def least_squares_gradient(problem: RegressionProblem, w: np.ndarray) -> np.ndarray:
    """Gradient of the halved mean squared residual: X^T (Xw - y) / n."""
    w = _check_w(problem, w)
    return problem.X.T @ (problem.X @ w - problem.y) / problem.n


def _check_w(problem: RegressionProblem, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.p,):
        raise ValueError(f"expected a vector of length {problem.p}, got shape {w.shape}")
    return w


class LeastSquaresObjective:
    """Least-squares loss bound to a problem, in the pluggable objective shape."""

    def __init__(self, problem: RegressionProblem):
        self.problem = problem

    @property
    def p(self) -> int:
        return self.problem.p

    def value(self, w: np.ndarray) -> float:
        return least_squares_value(self.problem, w)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return least_squares_gradient(self.problem, w)


def check_gradient(obj, w: np.ndarray, h: float = 1e-5) -> float:
    """Worst-case relative disagreement between obj.gradient and central differences.

    The error is scaled by the largest magnitude seen in either gradient, so
    a uniformly wrong gradient (e.g. scaled by 2) reports an error near 0.5
    and an exact gradient reports an error near float rounding level.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got h={h}")
    w = np.asarray(w, dtype=float)
    analytic = np.asarray(obj.gradient(w), dtype=float)
    numeric = np.empty_like(analytic)
    for j in range(w.size):
        step = np.zeros_like(w)
        step[j] = h
        numeric[j] = (obj.value(w + step) - obj.value(w - step)) / (2.0 * h)
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(numeric - analytic)) / scale)


@dataclass(frozen=True)
class RestrictedSpectrumEstimate:
    """Observed range of Rayleigh quotients ||Xw||^2 / (n ||w||^2) over
    random k-group supports.

    ``rank_deficient`` flags that some sampled support had more coordinates
    than samples, in which case the restricted minimum is exactly zero.
    """

    alpha_hat: float
    L_hat: float
    trials: int
    k: int
    rank_deficient: bool = False


def estimate_restricted_spectrum(
    problem: RegressionProblem,
    layout: GroupLayout,
    k: int,
    trials: int,
    seed: int,
) -> RestrictedSpectrumEstimate:
    """Monte-Carlo probe of the restricted eigenvalue range at group level k.

    Each trial draws a uniform k-group support (trial t uses the derived
    stream (seed, t), so trials are order- and worker-independent) and
    records the extreme Rayleigh quotients attainable on it, i.e. the
    smallest and largest eigenvalues of the restricted Gram matrix
    X_S^T X_S / n.  The hard part, the extremes over *all* supports, stays
    Monte-Carlo; sampling a single random direction per support instead
    would concentrate around the trace and systematically miss the edges.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 1 <= k <= layout.M:
        raise ValueError(f"k must be in [1, {layout.M}], got {k}")
    if problem.p != layout.p:
        raise ValueError(f"problem has p={problem.p} but layout has p={layout.p}")
    lo, hi = np.inf, -np.inf
    rank_deficient = False
    for t in range(trials):
        rng = np.random.default_rng((seed, t))
        ids = rng.choice(layout.M, size=k, replace=False)
        coords = group_support(layout, ids).coords
        if coords.size > problem.n:
            rank_deficient = True
        Xs = problem.X[:, coords]
        evals = np.linalg.eigvalsh(Xs.T @ Xs / problem.n)
        lo = min(lo, max(float(evals[0]), 0.0))
        hi = max(hi, float(evals[-1]))
    return RestrictedSpectrumEstimate(
        alpha_hat=lo, L_hat=hi, trials=trials, k=k, rank_deficient=rank_deficient
    )


@dataclass(frozen=True)
class StepSizeEstimate:
    """Default solver step size 1 / (4 lambda_max) plus the raw estimate.

    ``lambda_max`` is the largest eigenvalue of X^T X / n from power
    iteration; callers wanting the aggressive 1 / lambda_max rule can apply
    it to the exposed raw value.
    """

    eta: float
    lambda_max: float
    iterations: int


def estimate_step_size(
    problem: RegressionProblem, max_iters: int = 100, rel_tol: float = 1e-8
) -> StepSizeEstimate:
    """Power-iteration estimate of lambda_max(X^T X / n) and the step 1/(4 lambda_max)."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(problem.p)
    v /= np.linalg.norm(v)
    lam = 0.0
    iters = 0
    for iters in range(1, max_iters + 1):
        av = problem.X.T @ (problem.X @ v) / problem.n
        new_lam = float(np.linalg.norm(av))
        if new_lam == 0.0:
            raise ValueError("design matrix is zero; no valid step size exists")
        v = av / new_lam
        if abs(new_lam - lam) <= rel_tol * new_lam:
            lam = new_lam
            break
        lam = new_lam
    return StepSizeEstimate(eta=1.0 / (4.0 * lam), lambda_max=lam, iterations=iters)


# On-disk format for RegressionProblem: plain CSV, one sample per row,
# features first and the response as the final column.

def problem_to_csv(problem: RegressionProblem, path) -> None:
    data = np.column_stack([problem.X, problem.y])
    with open(path, "w", newline="") as fh:
        for row in data:
            fh.write(",".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def problem_from_csv(path) -> RegressionProblem:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] < 2:
        raise ValueError("expected at least one feature column plus the response column")
    return RegressionProblem(X=data[:, :-1], y=data[:, -1])
