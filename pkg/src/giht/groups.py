"""Overlapping group structures over coordinates {0..p-1}.

A layout is an ordered list of index sets (groups) that may overlap
arbitrarily.  Layouts are immutable after validation and safe to share
across workers; every operation in this module is a pure function.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InfeasibleError",
    "GroupLayout",
    "GroupSupport",
    "MaxSupportEstimate",
    "make_layout",
    "validate_layout",
    "layout_is_disjoint",
    "layout_to_json",
    "layout_from_json",
    "group_support",
    "group_l0_bruteforce",
    "max_support_size",
    "coverage_energy",
]

# Enumeration guard for the brute-force oracles; C(20, 10) subsets is the
# worst case they are allowed to scan.
DEFAULT_MAX_M = 20


class InfeasibleError(ValueError):
    """A requested object does not exist under the given group structure."""


@dataclass(frozen=True, eq=False)
class GroupLayout:
    """Immutable group structure: M index sets over the ambient dimension p.

    ``groups[i]`` is a sorted, read-only integer array; the group id is the
    list position.  ``covers_ambient`` is true iff the union of all groups
    is {0..p-1}.
    """

    p: int
    groups: tuple[np.ndarray, ...]
    covers_ambient: bool

    @property
    def M(self) -> int:
        return len(self.groups)

    def coords_union(self) -> np.ndarray:
        """Sorted array of all coordinates covered by at least one group."""
        mask = np.zeros(self.p, dtype=bool)
        for g in self.groups:
            mask[g] = True
        return np.flatnonzero(mask)

    def group_sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups], dtype=np.int64)


def make_layout(p: int, groups) -> GroupLayout:
    """Build and validate a GroupLayout from any iterable of index iterables.

    Rejects an empty group list, empty groups, and out-of-range indices.
    Duplicate indices inside a group collapse; group order is preserved.
    """
    if p < 1:
        raise ValueError(f"ambient dimension must be positive, got p={p}")
    normalized = []
    mask = np.zeros(p, dtype=bool)
    for gid, raw in enumerate(groups):
        idx = np.unique(np.asarray(list(raw), dtype=np.int64))
        if idx.size == 0:
            raise ValueError(f"group {gid} is empty")
        if idx[0] < 0 or idx[-1] >= p:
            raise ValueError(
                f"group {gid} has indices outside [0, {p}): "
                f"range [{idx[0]}, {idx[-1]}]"
            )
        idx.setflags(write=False)
        normalized.append(idx)
        mask[idx] = True
    if not normalized:
        raise ValueError("a layout needs at least one group")
    return GroupLayout(p=p, groups=tuple(normalized), covers_ambient=bool(mask.all()))


def validate_layout(layout: GroupLayout) -> GroupLayout:
    """Re-check all layout invariants and recompute ``covers_ambient``."""
    return make_layout(layout.p, layout.groups)


def layout_is_disjoint(layout: GroupLayout) -> bool:
    total = int(sum(len(g) for g in layout.groups))
    return total == len(layout.coords_union())


def layout_to_json(layout: GroupLayout) -> str:
    doc = {"p": layout.p, "groups": [g.tolist() for g in layout.groups]}
    return json.dumps(doc)


def layout_from_json(text: str) -> GroupLayout:
    doc = json.loads(text)
    return make_layout(int(doc["p"]), doc["groups"])


@dataclass(frozen=True, eq=False)
class GroupSupport:
    """An explicit group-support: which groups are in use, and their union."""

    group_ids: tuple[int, ...]
    coords: np.ndarray

    @property
    def size(self) -> int:
        return len(self.group_ids)


def group_support(layout: GroupLayout, group_ids) -> GroupSupport:
    """Canonical GroupSupport for a set of group ids (sorted, deduplicated)."""
    ids = sorted(set(int(i) for i in group_ids))
    if ids and (ids[0] < 0 or ids[-1] >= layout.M):
        raise ValueError(f"group id out of range [0, {layout.M}): {ids}")
    mask = np.zeros(layout.p, dtype=bool)
    for i in ids:
        mask[layout.groups[i]] = True
    coords = np.flatnonzero(mask)
    coords.setflags(write=False)
    return GroupSupport(group_ids=tuple(ids), coords=coords)


@dataclass(frozen=True)
class MaxSupportEstimate:
    """Bounds on the largest support reachable with k groups.

    ``upper_bound`` is the sum of the k largest group sizes;
    ``greedy_estimate`` is the size of a greedy max-coverage k-group union.
    The exact maximum is max-coverage, which is intractable in general.
    """

    upper_bound: int
    greedy_estimate: int


def _group_bitmasks(layout: GroupLayout) -> list[int]:
    masks = []
    for g in layout.groups:
        m = 0
        for j in g.tolist():
            m |= 1 << j
        masks.append(m)
    return masks


def group_l0_bruteforce(w: np.ndarray, layout: GroupLayout, max_M: int = DEFAULT_MAX_M) -> int:
    """Minimum number of groups whose union contains supp(w).

    Exhaustive subset enumeration in increasing cardinality, so only usable
    for small M (guarded by ``max_M``).  Raises InfeasibleError when the
    support is not coverable at all.
    """
    if layout.M > max_M:
        raise ValueError(
            f"brute-force cover enumeration guarded at M <= {max_M}, got M={layout.M}"
        )
    w = np.asarray(w, dtype=float)
    if w.shape != (layout.p,):
        raise ValueError(f"expected a vector of length {layout.p}, got shape {w.shape}")
    support = np.flatnonzero(w)
    if support.size == 0:
        return 0
    supp_bits = 0
    for j in support.tolist():
        supp_bits |= 1 << j
    masks = _group_bitmasks(layout)
    full = 0
    for m in masks:
        full |= m
    if supp_bits & ~full:
        raise InfeasibleError("supp(w) is not contained in the union of the groups")
    for r in range(1, layout.M + 1):
        for combo in itertools.combinations(range(layout.M), r):
            union = 0
            for i in combo:
                union |= masks[i]
            if not (supp_bits & ~union):
                return r
    raise InfeasibleError("unreachable: full union covers the support")  # pragma: no cover


def max_support_size(layout: GroupLayout, k: int) -> MaxSupportEstimate:
    """Upper bound and greedy estimate of max |supp(w)| over k-group-sparse w."""
    if not 1 <= k <= layout.M:
        raise ValueError(f"k must be in [1, {layout.M}], got {k}")
    sizes = sorted((len(g) for g in layout.groups), reverse=True)
    upper = int(sum(sizes[:k]))

    covered = np.zeros(layout.p, dtype=bool)
    chosen: set[int] = set()
    for _ in range(k):
        best_id, best_gain = -1, -1
        for i in range(layout.M):
            if i in chosen:
                continue
            gain = int(np.count_nonzero(~covered[layout.groups[i]]))
            if gain > best_gain:
                best_id, best_gain = i, gain
        chosen.add(best_id)
        covered[layout.groups[best_id]] = True
    return MaxSupportEstimate(upper_bound=upper, greedy_estimate=int(covered.sum()))


def coverage_energy(S, g: np.ndarray, layout: GroupLayout) -> float:
    """Energy of g on the union of the groups in S: sum of g_j^2 over the union.

    This set function is monotone and submodular in S, which is what makes
    greedy selection effective for the projection problem.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (layout.p,):
        raise ValueError(f"expected a vector of length {layout.p}, got shape {g.shape}")
    mask = np.zeros(layout.p, dtype=bool)
    for i in S:
        i = int(i)
        if not 0 <= i < layout.M:
            raise ValueError(f"group id out of range [0, {layout.M}): {i}")
        mask[layout.groups[i]] = True
    return float(np.sum(g[mask] ** 2))
