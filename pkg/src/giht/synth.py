"""Synthetic recovery instances: conditioned Gaussian designs, contiguous
overlapping group layouts, group-sparse (optionally within-group-sparse)
ground truths, and additive white Gaussian noise.

Randomness uses numpy's PCG64 (``default_rng``) seeded with tuples.  The
stream-splitting rule, for a spec seed s, is:

* ``(s, 0)``        active groups and signal entries
* ``(s, 1, i)``     row i of the design matrix
* ``(s, 2)``        observation noise
* ``(s, 3)``        random rotation of the covariance (when enabled)

Per-row design substreams make generation reproducible bit-for-bit no
matter how rows are batched across workers.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .groups import (
    GroupLayout,
    GroupSupport,
    InfeasibleError,
    group_support,
    layout_from_json,
    layout_to_json,
    make_layout,
)
from .objective import RegressionProblem, problem_from_csv, problem_to_csv

__all__ = [
    "SynthSpec",
    "SynthInstance",
    "CovarianceModel",
    "contiguous_layout",
    "make_covariance",
    "generate",
    "save_instance",
    "load_instance",
]

STREAM_SIGNAL = 0
STREAM_DESIGN = 1
STREAM_NOISE = 2
STREAM_ROTATION = 3


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic instance.

    M contiguous groups of size B, with ``overlap`` coordinates shared
    between consecutive groups; k_star active groups filled with
    Uniform[-1, 1] entries (``k2_star`` keeps only that many per active
    group when set); rows drawn N(0, Sigma) with condition number kappa;
    observations corrupted with N(0, noise_lambda^2) noise.
    """

    M: int
    B: int
    overlap: int
    k_star: int
    n: int
    k2_star: int | None = None
    kappa: float = 1.0
    noise_lambda: float = 0.0
    rotate: bool = False
    seed: int = 0

    @property
    def p(self) -> int:
        return self.M * self.B - (self.M - 1) * self.overlap

    def validate(self) -> None:
        if self.M < 1:
            raise InfeasibleError(f"need at least one group, got M={self.M}")
        if not 0 <= self.overlap < self.B:
            raise InfeasibleError(
                f"overlap must satisfy 0 <= overlap < B, got overlap={self.overlap}, B={self.B}"
            )
        if not 1 <= self.k_star <= self.M:
            raise InfeasibleError(f"k_star must be in [1, {self.M}], got {self.k_star}")
        if self.k2_star is not None and not 1 <= self.k2_star <= self.B:
            raise InfeasibleError(f"k2_star must be in [1, {self.B}], got {self.k2_star}")
        if self.kappa < 1:
            raise InfeasibleError(f"kappa must be >= 1, got {self.kappa}")
        if self.noise_lambda < 0:
            raise InfeasibleError(f"noise_lambda must be >= 0, got {self.noise_lambda}")
        if self.n < 1:
            raise InfeasibleError(f"need at least one sample, got n={self.n}")
        if self.seed < 0:
            raise InfeasibleError(f"seed must be non-negative, got {self.seed}")


@dataclass(eq=False)
class SynthInstance:
    """A generated instance: data, layout, and the ground truth behind it."""

    problem: RegressionProblem
    layout: GroupLayout
    w_star: np.ndarray
    active_groups: GroupSupport
    within_group_support: dict[int, np.ndarray] | None = None


def contiguous_layout(M: int, B: int, o: int) -> GroupLayout:
    """Contiguous groups of size B where consecutive groups share o coordinates.

    Group i covers [i*(B-o), i*(B-o) + B); the ambient dimension works out
    to M*B - (M-1)*o and is fully covered.
    """
    if M < 1:
        raise ValueError(f"need at least one group, got M={M}")
    if not 0 <= o < B:
        raise ValueError(f"overlap must satisfy 0 <= o < B, got o={o}, B={B}")
    stride = B - o
    groups = [range(i * stride, i * stride + B) for i in range(M)]
    return make_layout(M * B - (M - 1) * o, groups)


@dataclass(eq=False)
class CovarianceModel:
    """Feature covariance with geometrically spaced eigenvalues 1 .. 1/kappa.

    Captured as its spectral pieces so the square-root action scales to
    large p; ``rotation`` is None for a diagonal covariance.
    """

    eigenvalues: np.ndarray
    rotation: np.ndarray | None

    @property
    def sigma_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def sigma_min(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition_number(self) -> float:
        return self.sigma_max / self.sigma_min

    def apply_sqrt(self, rows: np.ndarray) -> np.ndarray:
        """Map each row z to z Sigma^{1/2} (the symmetric square root)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        root = np.sqrt(self.eigenvalues)
        if self.rotation is None:
            return rows * root
        return ((rows @ self.rotation) * root) @ self.rotation.T

    def matrix(self) -> np.ndarray:
        """Dense Sigma; only sensible for small p diagnostics."""
        if self.rotation is None:
            return np.diag(self.eigenvalues)
        return (self.rotation * self.eigenvalues) @ self.rotation.T


def make_covariance(p: int, kappa: float, rotate: bool = False, seed: int = 0) -> CovarianceModel:
    """Covariance with condition number exactly kappa (eigenvalues geometric
    from 1 down to 1/kappa), optionally conjugated by a seeded random rotation."""
    if p < 1:
        raise ValueError(f"dimension must be positive, got p={p}")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if p == 1 or kappa == 1.0:
        eig = np.ones(p)
    else:
        eig = np.geomspace(1.0, 1.0 / kappa, p)
    rotation = None
    if rotate:
        rng = np.random.default_rng((seed, STREAM_ROTATION))
        a = rng.standard_normal((p, p))
        q, r = np.linalg.qr(a)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        rotation = q * signs
    return CovarianceModel(eigenvalues=eig, rotation=rotation)


def _draw_design(spec: SynthSpec, cov: CovarianceModel) -> np.ndarray:
    p = spec.p
    z = np.empty((spec.n, p))
    for i in range(spec.n):
        z[i] = np.random.default_rng((spec.seed, STREAM_DESIGN, i)).standard_normal(p)
    return cov.apply_sqrt(z)


def generate(spec: SynthSpec) -> SynthInstance:
    """Draw a full instance from a spec; identical output for identical seeds."""
    spec.validate()
    layout = contiguous_layout(spec.M, spec.B, spec.overlap)

    rng = np.random.default_rng((spec.seed, STREAM_SIGNAL))
    active_ids = np.sort(rng.choice(spec.M, size=spec.k_star, replace=False))
    active = group_support(layout, active_ids)
    w_star = np.zeros(spec.p)
    w_star[active.coords] = rng.uniform(-1.0, 1.0, size=active.coords.size)

    within: dict[int, np.ndarray] | None = None
    if spec.k2_star is not None:
        keep_mask = np.zeros(spec.p, dtype=bool)
        claimed = np.zeros(spec.p, dtype=bool)
        within = {}
        for gid in active.group_ids:
            idx = layout.groups[gid]
            order = np.argsort(-np.abs(w_star[idx]), kind="stable")[: spec.k2_star]
            kept = np.sort(idx[order])
            keep_mask[kept] = True
            mine = kept[~claimed[kept]]
            claimed[kept] = True
            mine.setflags(write=False)
            within[int(gid)] = mine
        w_star[~keep_mask] = 0.0

    cov = make_covariance(spec.p, spec.kappa, rotate=spec.rotate, seed=spec.seed)
    X = _draw_design(spec, cov)
    y = X @ w_star
    if spec.noise_lambda > 0:
        noise = np.random.default_rng((spec.seed, STREAM_NOISE)).standard_normal(spec.n)
        y = y + spec.noise_lambda * noise

    return SynthInstance(
        problem=RegressionProblem(X=X, y=y),
        layout=layout,
        w_star=w_star,
        active_groups=active,
        within_group_support=within,
    )


# Instance persistence: data.csv holds X with y as the final column,
# layout.json the group structure, w_star.csv the ground truth (one value
# per line), and meta.json the spec, seed, and active set for replay.

def save_instance(instance: SynthInstance, directory, spec: SynthSpec | None = None) -> None:
    os.makedirs(directory, exist_ok=True)
    problem_to_csv(instance.problem, os.path.join(directory, "data.csv"))
    with open(os.path.join(directory, "layout.json"), "w") as fh:
        fh.write(layout_to_json(instance.layout))
    with open(os.path.join(directory, "w_star.csv"), "w", newline="") as fh:
        for x in instance.w_star:
            fh.write(f"{x:.17g}\n")
    meta = {
        "spec": asdict(spec) if spec is not None else None,
        "active_groups": list(instance.active_groups.group_ids),
        "within_group_support": (
            {str(k): v.tolist() for k, v in instance.within_group_support.items()}
            if instance.within_group_support is not None
            else None
        ),
    }
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_instance(directory) -> SynthInstance:
    problem = problem_from_csv(os.path.join(directory, "data.csv"))
    with open(os.path.join(directory, "layout.json")) as fh:
        layout = layout_from_json(fh.read())
    w_star = np.loadtxt(os.path.join(directory, "w_star.csv"), ndmin=1)
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    within = None
    if meta.get("within_group_support") is not None:
        within = {
            int(k): np.asarray(v, dtype=np.int64)
            for k, v in meta["within_group_support"].items()
        }
    return SynthInstance(
        problem=problem,
        layout=layout,
        w_star=w_star,
        active_groups=group_support(layout, meta["active_groups"]),
        within_group_support=within,
    )
