import numpy as np
import pytest

from giht import (
    InfeasibleError,
    SynthSpec,
    contiguous_layout,
    generate,
    group_l0_bruteforce,
    load_instance,
    make_covariance,
    save_instance,
)


def test_contiguous_layout_small():
    lay = contiguous_layout(2, 3, 1)
    assert lay.p == 5
    assert [list(g) for g in lay.groups] == [[0, 1, 2], [2, 3, 4]]
    assert lay.covers_ambient


def test_contiguous_layout_disjoint():
    lay = contiguous_layout(4, 3, 0)
    assert lay.p == 12
    assert all(len(g) == 3 for g in lay.groups)


def test_contiguous_layout_paper_scale_dimension():
    # M=1000 groups of 25 with 5 shared entries between neighbours
    lay = contiguous_layout(1000, 25, 5)
    assert lay.p == 20005
    assert lay.covers_ambient


def test_contiguous_layout_bounds():
    with pytest.raises(ValueError):
        contiguous_layout(0, 3, 1)
    with pytest.raises(ValueError):
        contiguous_layout(2, 3, 3)
    with pytest.raises(ValueError):
        contiguous_layout(2, 3, -1)


def test_covariance_identity():
    cov = make_covariance(5, 1.0)
    assert np.array_equal(cov.eigenvalues, np.ones(5))
    assert cov.condition_number == 1.0
    rot = make_covariance(5, 1.0, rotate=True, seed=0)
    z = np.random.default_rng(0).standard_normal((3, 5))
    assert np.allclose(rot.apply_sqrt(z), z)


def test_covariance_geometric_profile():
    cov = make_covariance(4, 10.0)
    expect = np.array([1.0, 10 ** (-1 / 3), 10 ** (-2 / 3), 0.1])
    assert cov.eigenvalues == pytest.approx(expect, rel=1e-12)
    assert cov.condition_number == pytest.approx(10.0, rel=1e-14)
    with pytest.raises(ValueError):
        make_covariance(4, 0.5)


def test_covariance_rotation_preserves_spectrum():
    cov = make_covariance(6, 25.0, rotate=True, seed=3)
    evals = np.linalg.eigvalsh(cov.matrix())
    assert np.sort(evals) == pytest.approx(np.sort(cov.eigenvalues), rel=1e-10)


def test_covariance_sqrt_action_squares_to_matrix():
    cov = make_covariance(5, 7.0, rotate=True, seed=4)
    eye = np.eye(5)
    assert cov.apply_sqrt(cov.apply_sqrt(eye)) == pytest.approx(cov.matrix(), abs=1e-12)


def test_generate_deterministic_and_seed_sensitive():
    spec = SynthSpec(M=8, B=4, overlap=1, k_star=2, n=30, noise_lambda=0.1, seed=5)
    a = generate(spec)
    b = generate(spec)
    assert np.array_equal(a.problem.X, b.problem.X)
    assert np.array_equal(a.problem.y, b.problem.y)
    assert np.array_equal(a.w_star, b.w_star)
    other = generate(SynthSpec(M=8, B=4, overlap=1, k_star=2, n=30, noise_lambda=0.1, seed=6))
    assert not np.array_equal(a.problem.X, other.problem.X)


def test_generate_noiseless_consistency():
    spec = SynthSpec(M=6, B=5, overlap=2, k_star=2, n=40, seed=1)
    inst = generate(spec)
    assert np.allclose(inst.problem.y, inst.problem.X @ inst.w_star)


def test_generate_signal_structure():
    spec = SynthSpec(M=10, B=5, overlap=1, k_star=3, n=20, seed=2)
    inst = generate(spec)
    assert inst.active_groups.size == 3
    assert np.all(np.isin(np.flatnonzero(inst.w_star), inst.active_groups.coords))
    assert group_l0_bruteforce(inst.w_star, inst.layout, max_M=10) <= 3
    on = inst.w_star[inst.active_groups.coords]
    assert np.all(np.abs(on) <= 1.0)


def test_generate_sog_signal_structure():
    spec = SynthSpec(M=100, B=50, overlap=10, k_star=5, k2_star=30, n=5, seed=3)
    assert spec.p == 4010
    inst = generate(spec)
    assert inst.within_group_support is not None
    assert set(inst.within_group_support) == set(inst.active_groups.group_ids)
    claimed = np.zeros(spec.p, dtype=bool)
    for gid, coords in inst.within_group_support.items():
        assert len(coords) <= 30
        assert np.all(np.isin(coords, inst.layout.groups[gid]))
        assert not np.any(claimed[coords])  # disjoint assignment
        claimed[coords] = True
    assert np.all(np.isin(np.flatnonzero(inst.w_star), np.flatnonzero(claimed)))


def test_generate_noise_variance():
    spec = SynthSpec(M=4, B=3, overlap=0, k_star=1, n=10_000, noise_lambda=0.3, seed=4)
    inst = generate(spec)
    noise = inst.problem.y - inst.problem.X @ inst.w_star
    assert np.var(noise) == pytest.approx(0.09, rel=0.1)


def test_generate_identity_covariance_sample_moments():
    spec = SynthSpec(M=4, B=3, overlap=0, k_star=1, n=6000, seed=5)
    inst = generate(spec)
    sample_cov = inst.problem.X.T @ inst.problem.X / spec.n
    assert np.linalg.norm(sample_cov - np.eye(spec.p)) / spec.p < 0.05


def test_spec_validation():
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=3, k_star=1, n=10).validate()
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=0, k_star=5, n=10).validate()
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=0, k_star=1, n=10, kappa=0.1).validate()
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=0, k_star=1, n=0).validate()
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=0, k_star=1, n=10, k2_star=9).validate()
    with pytest.raises(InfeasibleError):
        SynthSpec(M=4, B=3, overlap=0, k_star=1, n=10, seed=-1).validate()


def test_save_load_roundtrip(tmp_path):
    spec = SynthSpec(M=6, B=4, overlap=1, k_star=2, k2_star=2, n=15,
                     noise_lambda=0.05, seed=8)
    inst = generate(spec)
    save_instance(inst, tmp_path / "inst", spec)
    back = load_instance(tmp_path / "inst")
    assert np.array_equal(back.problem.X, inst.problem.X)
    assert np.array_equal(back.problem.y, inst.problem.y)
    assert np.array_equal(back.w_star, inst.w_star)
    assert back.active_groups.group_ids == inst.active_groups.group_ids
    assert set(back.within_group_support) == set(inst.within_group_support)
    for gid in back.within_group_support:
        assert np.array_equal(back.within_group_support[gid],
                              inst.within_group_support[gid])
