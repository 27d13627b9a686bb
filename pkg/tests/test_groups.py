import numpy as np
import pytest

from giht import (
    InfeasibleError,
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

from conftest import random_layout


def test_validate_disjoint_cover():
    lay = make_layout(4, [[0, 1], [2, 3]])
    assert lay.covers_ambient
    assert lay.M == 2
    assert layout_is_disjoint(lay)


def test_validate_partial_cover():
    lay = make_layout(4, [[0, 1]])
    assert not lay.covers_ambient


def test_validate_rejects_bad_layouts():
    with pytest.raises(ValueError):
        make_layout(4, [[0, 5]])
    with pytest.raises(ValueError):
        make_layout(4, [[0, 1], []])
    with pytest.raises(ValueError):
        make_layout(4, [])
    with pytest.raises(ValueError):
        make_layout(0, [[0]])


def test_validate_layout_recomputes_cover_flag():
    lay = make_layout(5, [[0, 1], [2, 3, 4]])
    again = validate_layout(lay)
    assert again.covers_ambient
    assert [list(g) for g in again.groups] == [[0, 1], [2, 3, 4]]


def test_layout_json_roundtrip():
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    text = layout_to_json(lay)
    back = layout_from_json(text)
    assert back.p == 6
    assert [list(g) for g in back.groups] == [[0, 1, 2], [2, 3], [4, 5]]
    assert back.covers_ambient


def test_group_support_union():
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    sup = group_support(lay, [1, 0, 1])
    assert sup.group_ids == (0, 1)
    assert list(sup.coords) == [0, 1, 2, 3]
    assert sup.size == 2
    with pytest.raises(ValueError):
        group_support(lay, [3])


def test_group_l0_zero_vector():
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    assert group_l0_bruteforce(np.zeros(6), lay) == 0


def test_group_l0_worked_examples():
    # groups {0,1,2}, {2,3}, {4,5}: coordinate 2 is covered by either of
    # the first two groups alone; {0,3,4} needs one group per coordinate.
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    w = np.zeros(6)
    w[2] = 1.0
    assert group_l0_bruteforce(w, lay) == 1
    w = np.zeros(6)
    w[[0, 3, 4]] = 1.0
    assert group_l0_bruteforce(w, lay) == 3


def test_group_l0_infeasible_and_guard():
    lay = make_layout(6, [[0, 1], [2, 3]])
    w = np.zeros(6)
    w[5] = 1.0
    with pytest.raises(InfeasibleError):
        group_l0_bruteforce(w, lay)
    big = make_layout(30, [[i] for i in range(30)])
    with pytest.raises(ValueError):
        group_l0_bruteforce(np.zeros(30), big)
    assert group_l0_bruteforce(np.zeros(30), big, max_M=30) == 0


def test_group_l0_never_exceeds_explicit_representation():
    rng = np.random.default_rng(42)
    for _ in range(60):
        lay = random_layout(rng, p_range=(4, 16), m_range=(2, 7))
        n_active = int(rng.integers(1, lay.M + 1))
        ids = rng.choice(lay.M, size=n_active, replace=False)
        sup = group_support(lay, ids)
        w = np.zeros(lay.p)
        w[sup.coords] = rng.standard_normal(sup.coords.size)
        assert group_l0_bruteforce(w, lay) <= sup.size


def test_max_support_size_disjoint_equal_groups():
    lay = make_layout(12, [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11]])
    for k in (1, 2, 3, 4):
        est = max_support_size(lay, k)
        assert est.upper_bound == est.greedy_estimate == 3 * k


def test_max_support_size_worked_example():
    # exhaustive check: the best 2-union of {0,1,2},{2,3},{4,5} is
    # {0,1,2} u {4,5} with 5 coordinates; sizes 3+2 bound it at 5 too
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    est = max_support_size(lay, 2)
    assert est.greedy_estimate == 5
    assert est.upper_bound == 5


def test_max_support_size_full_budget_and_bounds():
    lay = make_layout(8, [[0, 1, 2], [2, 3], [4, 5]])
    est = max_support_size(lay, 3)
    assert est.greedy_estimate == 6  # |union|, ambient not covered
    with pytest.raises(ValueError):
        max_support_size(lay, 0)
    with pytest.raises(ValueError):
        max_support_size(lay, 4)


def test_max_support_estimate_ordering():
    rng = np.random.default_rng(7)
    for _ in range(50):
        lay = random_layout(rng)
        k = int(rng.integers(1, lay.M + 1))
        est = max_support_size(lay, k)
        biggest = max(len(g) for g in lay.groups)
        assert est.greedy_estimate <= est.upper_bound <= k * biggest


def test_coverage_energy_examples():
    lay = make_layout(6, [[0, 1, 2], [2, 3], [4, 5]])
    g = np.array([3.0, 0.0, 0.0, 4.0, 1.0, 1.0])
    assert coverage_energy(set(), g, lay) == 0.0
    assert coverage_energy({0, 1}, g, lay) == pytest.approx(25.0)
    assert coverage_energy({2}, g, lay) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        coverage_energy({5}, g, lay)


def test_coverage_energy_submodular_and_monotone():
    # quick version of the acceptance property, for fast module feedback
    rng = np.random.default_rng(11)
    for _ in range(100):
        lay = random_layout(rng, p_range=(4, 20), m_range=(3, 8))
        g = rng.standard_normal(lay.p)
        ids = list(range(lay.M))
        rng.shuffle(ids)
        i = ids[0]
        rest = ids[1:]
        t_size = int(rng.integers(1, len(rest) + 1))
        T = set(rest[:t_size])
        S = set(x for x in T if rng.random() < 0.5)
        gain_s = coverage_energy(S | {i}, g, lay) - coverage_energy(S, g, lay)
        gain_t = coverage_energy(T | {i}, g, lay) - coverage_energy(T, g, lay)
        assert gain_s >= gain_t - 1e-12
        assert coverage_energy(S, g, lay) <= coverage_energy(T, g, lay) + 1e-12
