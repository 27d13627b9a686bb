import numpy as np

from giht import make_layout


def random_layout(rng, p_range=(4, 24), m_range=(2, 10), max_frac=3):
    """Random overlapping layout: M groups, each a uniform subset of [p]."""
    p = int(rng.integers(*p_range))
    M = int(rng.integers(*m_range))
    groups = []
    for _ in range(M):
        size = int(rng.integers(1, max(2, p // max_frac) + 1))
        groups.append(rng.choice(p, size=size, replace=False))
    return make_layout(p, groups)


def random_disjoint_layout(rng, p_range=(6, 40), m_range=(2, 8)):
    """Random partition of [p] into M non-empty groups."""
    p = int(rng.integers(*p_range))
    M = int(rng.integers(m_range[0], min(m_range[1], p) + 1))
    perm = rng.permutation(p)
    cuts = np.sort(rng.choice(np.arange(1, p), size=M - 1, replace=False))
    return make_layout(p, np.split(perm, cuts))
