"""Projections onto group-sparse and sparse-overlapping-group constraint sets.

The exact projection (keep the k-group union with the largest energy) is
NP-hard for overlapping groups, so the workhorse is a greedy selection over
groups.  An exhaustive oracle and an exact routine for disjoint layouts are
provided for testing and for the settings where they are tractable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .groups import (
    DEFAULT_MAX_M,
    GroupLayout,
    GroupSupport,
    group_support,
    layout_is_disjoint,
)

__all__ = [
    "ProjectionOutcome",
    "SogBudget",
    "greedy_project",
    "exact_project_disjoint",
    "exact_project_bruteforce",
    "sog_greedy_project",
]


@dataclass(eq=False)
class ProjectionOutcome:
    """Result of projecting a vector onto a structured-sparsity set.

    ``u`` agrees with the input entrywise on the kept coordinates and is
    zero elsewhere.  ``gains`` holds the energy captured at each selection
    step; for the plain greedy projector it is non-increasing.
    ``within_group_support`` maps each selected group to the coordinates it
    kept (sparse-overlapping-group projection only).
    """

    u: np.ndarray
    selected: GroupSupport
    gains: tuple[float, ...]
    within_group_support: dict[int, np.ndarray] | None = None


@dataclass(frozen=True)
class SogBudget:
    """Sparse-overlapping-group budget: k1 groups, k2 coordinates per group."""

    k1: int
    k2: int

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError(f"budgets must be positive, got k1={self.k1}, k2={self.k2}")


def _check_vector(g: np.ndarray, layout: GroupLayout) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (layout.p,):
        raise ValueError(f"expected a vector of length {layout.p}, got shape {g.shape}")
    return g


def _argmax_group_energy(v: np.ndarray, layout: GroupLayout, excluded: set[int]) -> tuple[int, float]:
    # Ties broken by lowest group id: iterate ids ascending, strict >.
    best_id, best_sq = -1, -np.inf
    for i in range(layout.M):
        if i in excluded:
            continue
        gi = v[layout.groups[i]]
        sq = float(gi @ gi)
        if sq > best_sq:
            best_id, best_sq = i, sq
    return best_id, best_sq


def greedy_project(g: np.ndarray, k_tilde: int, layout: GroupLayout) -> ProjectionOutcome:
    """Greedy k_tilde-group projection.

    Each step selects the group with the largest residual norm, copies the
    residual entries of that group into the output, and zeroes them in the
    residual.  Exactly k_tilde groups are selected even if late gains are
    zero.  Coordinates outside the union of all groups always project to
    zero.
    """
    g = _check_vector(g, layout)
    if not 1 <= k_tilde <= layout.M:
        raise ValueError(f"k_tilde must be in [1, {layout.M}], got {k_tilde}")
    v = g.copy()
    u = np.zeros_like(v)
    chosen: set[int] = set()
    order: list[int] = []
    gains: list[float] = []
    for _ in range(k_tilde):
        gid, sq = _argmax_group_energy(v, layout, chosen)
        idx = layout.groups[gid]
        u[idx] += v[idx]
        v[idx] = 0.0
        chosen.add(gid)
        order.append(gid)
        gains.append(sq)
    return ProjectionOutcome(u=u, selected=group_support(layout, order), gains=tuple(gains))


def exact_project_disjoint(g: np.ndarray, k: int, layout: GroupLayout) -> ProjectionOutcome:
    """Exact k-group projection for pairwise-disjoint groups.

    Keeps the k groups with the largest norms (ties by lower group id),
    which is the exact minimizer of the projection problem when groups do
    not overlap.
    """
    g = _check_vector(g, layout)
    if not 1 <= k <= layout.M:
        raise ValueError(f"k must be in [1, {layout.M}], got {k}")
    if not layout_is_disjoint(layout):
        raise ValueError("exact_project_disjoint requires pairwise-disjoint groups")
    energies = np.array([float(g[idx] @ g[idx]) for idx in layout.groups])
    order = sorted(range(layout.M), key=lambda i: (-energies[i], i))[:k]
    u = np.zeros_like(g)
    for i in order:
        idx = layout.groups[i]
        u[idx] = g[idx]
    return ProjectionOutcome(
        u=u,
        selected=group_support(layout, order),
        gains=tuple(float(energies[i]) for i in order),
    )


def exact_project_bruteforce(
    g: np.ndarray, k: int, layout: GroupLayout, max_M: int = DEFAULT_MAX_M
) -> ProjectionOutcome:
    """Exact k-group projection by enumerating all C(M, k) group subsets.

    Returns the subset maximizing the covered energy; ties resolve to the
    lexicographically smallest id set.  Guarded by ``max_M``.
    """
    g = _check_vector(g, layout)
    if layout.M > max_M:
        raise ValueError(
            f"brute-force projection guarded at M <= {max_M}, got M={layout.M}"
        )
    if not 1 <= k <= layout.M:
        raise ValueError(f"k must be in [1, {layout.M}], got {k}")
    sq = g**2
    best_combo: tuple[int, ...] | None = None
    best_energy = -np.inf
    for combo in itertools.combinations(range(layout.M), k):
        mask = np.zeros(layout.p, dtype=bool)
        for i in combo:
            mask[layout.groups[i]] = True
        energy = float(sq[mask].sum())
        if energy > best_energy:
            best_combo, best_energy = combo, energy
    assert best_combo is not None
    # Marginal energies of the winning subset, added in ascending id order.
    mask = np.zeros(layout.p, dtype=bool)
    gains = []
    for i in best_combo:
        idx = layout.groups[i]
        fresh = idx[~mask[idx]]
        gains.append(float(sq[fresh].sum()))
        mask[idx] = True
    u = np.where(mask, g, 0.0)
    return ProjectionOutcome(
        u=u, selected=group_support(layout, best_combo), gains=tuple(gains)
    )


def sog_greedy_project(g: np.ndarray, budget: SogBudget, layout: GroupLayout) -> ProjectionOutcome:
    """Greedy projection onto the sparse-overlapping-group set.

    Runs k1 rounds; each round selects the unselected group with the
    largest residual norm, keeps only the top-k2 residual entries of that
    group by magnitude (ties by lowest coordinate index), accumulates them
    into the output and removes them from the residual.
    """
    g = _check_vector(g, layout)
    if not 1 <= budget.k1 <= layout.M:
        raise ValueError(f"k1 must be in [1, {layout.M}], got {budget.k1}")
    v = g.copy()
    u = np.zeros_like(v)
    chosen: set[int] = set()
    order: list[int] = []
    gains: list[float] = []
    kept: dict[int, np.ndarray] = {}
    for _ in range(budget.k1):
        gid, _ = _argmax_group_energy(v, layout, chosen)
        idx = layout.groups[gid]
        vals = v[idx]
        if budget.k2 >= len(idx):
            local = np.arange(len(idx))
        else:
            # Stable sort on -|v| keeps the lowest coordinate index on ties.
            local = np.argsort(-np.abs(vals), kind="stable")[: budget.k2]
        keep = np.sort(idx[local])
        gains.append(float(v[keep] @ v[keep]))
        u[keep] += v[keep]
        v[keep] = 0.0
        keep.setflags(write=False)
        kept[gid] = keep
        chosen.add(gid)
        order.append(gid)
    return ProjectionOutcome(
        u=u,
        selected=group_support(layout, order),
        gains=tuple(gains),
        within_group_support=kept,
    )
