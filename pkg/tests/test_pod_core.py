import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from podkit.models import GramKind, HilbertSpace, InequalityReport, InvalidArgument, TimeGrid, Trajectory
from podkit.pde_fem import assemble_fe, heat_semidiscrete
from podkit.pod_core import (
    build_correlation,
    coefficients,
    compute_pod,
    cross_norm_tail,
    degraded_bound,
    mode_norms,
    pod_from_trajectory,
    project,
    projection_error_series,
    sigma_tail,
    verify_cross_norm_identity,
    verify_energy_identity,
)


def random_fe_trajectory(seed, N, M, kind):
    p = assemble_fe("interval", N + 1)
    values = np.random.default_rng(seed).standard_normal((M + 1, N))
    return p, Trajectory(TimeGrid(1.0, M), values, p.space(kind))


def assert_identities_hold(basis, traj, other):
    for r in range(basis.J + 1):
        energy = verify_energy_identity(basis, traj, r)
        cross = verify_cross_norm_identity(basis, traj, r, other)
        assert energy.passed, energy.to_dict()
        assert cross.passed, cross.to_dict()


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2 ** 31),
    N=st.integers(min_value=4, max_value=200),
    M=st.integers(min_value=1, max_value=256),
    kind=st.sampled_from([GramKind.MASS, GramKind.STIFFNESS]),
)
def test_energy_and_cross_norm_identities(seed, N, M, kind):
    p, traj = random_fe_trajectory(seed, N, M, kind)
    other = p.space(GramKind.STIFFNESS if kind is GramKind.MASS else GramKind.MASS)
    assert_identities_hold(pod_from_trajectory(traj), traj, other)


@pytest.mark.parametrize("kind", [GramKind.MASS, GramKind.STIFFNESS])
def test_identities_on_heat_snapshots(kind):
    p = assemble_fe("interval", 64, nu=0.05)
    u0 = np.random.default_rng(11).standard_normal(p.coords.shape[0])
    traj = heat_semidiscrete(p, None, u0, TimeGrid(1.0, 128)).with_space(p.space(kind))
    basis = pod_from_trajectory(traj)
    assert basis.J >= 5
    other = p.space(GramKind.STIFFNESS if kind is GramKind.MASS else GramKind.MASS)
    assert_identities_hold(basis, traj, other)


@pytest.mark.parametrize("decay", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("kind", [GramKind.MASS, GramKind.STIFFNESS])
def test_identities_on_geometric_spectrum(decay, kind):
    N, M = 80, 128
    p = assemble_fe("interval", N + 1)
    rng = np.random.default_rng(int(decay * 10))
    values = rng.standard_normal((M + 1, N)) * decay ** np.arange(N)
    traj = Trajectory(TimeGrid(1.0, M), values, p.space(kind))
    basis = pod_from_trajectory(traj)
    # the spectrum runs past the rank cut, so the remainder carries energy
    assert basis.remainder_sigma.size > 0
    assert sigma_tail(basis)[basis.J] > 0
    other = p.space(GramKind.STIFFNESS if kind is GramKind.MASS else GramKind.MASS)
    assert_identities_hold(basis, traj, other)


def test_remainder_holds_directions_below_rank_tol(interval):
    rng = np.random.default_rng(5)
    values = rng.standard_normal((20, interval.dofs)) * 0.1 ** np.arange(interval.dofs)
    traj = Trajectory(TimeGrid(1.0, 19), values, interval.space(GramKind.MASS))
    basis = pod_from_trajectory(traj, rank_tol=1e-6)
    assert basis.remainder_sigma.size > 0
    assert np.all(basis.remainder_sigma <= basis.sigma[-1])
    everything = np.vstack([basis.modes, basis.remainder_modes])
    gram = everything @ basis.space.apply(everything).T
    np.testing.assert_allclose(gram, np.eye(everything.shape[0]), atol=1e-10)
    errors = projection_error_series(basis, basis.J, traj)
    assert errors.quadratic_mean == pytest.approx(sigma_tail(basis)[basis.J], rel=1e-8)
    assert verify_energy_identity(basis, traj, basis.J).passed


def test_sigma_squares_are_correlation_eigenvalues(periodic_case):
    _, _, traj, _ = periodic_case
    corr = build_correlation(traj, drop_first=True)
    basis = compute_pod(corr, traj)
    lam = np.linalg.eigvalsh(corr.entries)[::-1][: basis.J]
    np.testing.assert_allclose(basis.sigma ** 2, lam, rtol=1e-8, atol=1e-14 * lam[0])


def test_modes_are_orthonormal_and_sigma_descending(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj, drop_first=True)
    gram = basis.modes @ basis.space.apply(basis.modes).T
    np.testing.assert_allclose(gram, np.eye(basis.J), atol=1e-10)
    assert np.all(np.diff(basis.sigma) <= 0)
    assert basis.J == 6


def test_mode_norms_in_own_space_are_one(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    np.testing.assert_allclose(mode_norms(basis, basis.space), 1.0, rtol=1e-10)


def test_correlation_weight_and_drop_first():
    traj = Trajectory(TimeGrid(1.0, 4), np.arange(10.0).reshape(5, 2))
    assert build_correlation(traj).weight == pytest.approx(1 / 5)
    corr = build_correlation(traj, drop_first=True)
    assert corr.weight == pytest.approx(1 / 4)
    assert corr.entries.shape == (4, 4)
    np.testing.assert_array_equal(corr.entries, corr.entries.T)


def test_rank_deficient_and_zero_trajectories():
    grid = TimeGrid(1.0, 6)
    const = Trajectory(grid, np.tile([1.0, 2.0, 3.0], (7, 1)))
    basis = pod_from_trajectory(const)
    assert basis.J == 1
    assert basis.sigma[0] == pytest.approx(math.sqrt(14.0))
    assert sigma_tail(basis)[1] <= 1e-12 * sigma_tail(basis)[0]

    zero = Trajectory(grid, np.zeros((7, 3)))
    empty = pod_from_trajectory(zero)
    assert empty.J == 0
    assert empty.modes.shape == (0, 3)
    np.testing.assert_array_equal(projection_error_series(empty, 0, zero).errors, 0.0)


def test_projection_is_idempotent(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    once = project(basis, 3, traj.values)
    np.testing.assert_allclose(project(basis, 3, once), once, atol=1e-12)
    assert coefficients(basis, 3, traj.values).shape == (traj.grid.M + 1, 3)


def test_full_rank_projection_is_exact(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    errors = projection_error_series(basis, basis.J, traj)
    assert errors.maximum <= 1e-10 * float(traj.space.norms(traj.values).max())


def test_rank_out_of_range_rejected(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    with pytest.raises(InvalidArgument):
        project(basis, basis.J + 1, traj.values)
    with pytest.raises(InvalidArgument):
        degraded_bound(basis, -1)


def test_sigma_tail_and_degraded_bound(periodic_case):
    _, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj, drop_first=True)
    tails = sigma_tail(basis)
    assert tails.shape == (basis.J + 1,)
    assert np.all(np.diff(tails) <= 0)
    assert tails[-1] <= 1e-12 * tails[0]
    assert tails[0] ** 2 == pytest.approx(float(np.sum(basis.sigma ** 2)))
    assert degraded_bound(basis, 2) == pytest.approx(math.sqrt(traj.grid.M) * tails[2])
    # the energy identity alone already bounds every snapshot error
    errors = projection_error_series(basis, 2, traj)
    assert errors.maximum <= degraded_bound(basis, 2) * (1 + 1e-12)
    assert errors.quadratic_mean == pytest.approx(tails[2], rel=1e-9)


def test_mean_subtraction_centers_snapshots(periodic_case):
    _, _, traj, _ = periodic_case
    shifted = traj.with_values(traj.values + traj.values[1:].mean(axis=0) + 1.0)
    basis = pod_from_trajectory(shifted, drop_first=True, subtract_mean=True)
    np.testing.assert_allclose(basis.mean, shifted.values[1:].mean(axis=0))
    report = verify_energy_identity(basis, shifted, 2)
    assert report.passed
    assert projection_error_series(basis, basis.J, shifted).maximum < 1e-8


def test_cross_norm_tail_is_zero_at_full_rank(interval):
    traj = Trajectory(
        TimeGrid(1.0, 5),
        np.random.default_rng(3).standard_normal((6, interval.dofs)),
        interval.space(GramKind.MASS),
    )
    basis = pod_from_trajectory(traj)
    assert cross_norm_tail(basis, basis.J, interval.space(GramKind.STIFFNESS)) == 0.0


def test_compute_pod_rejects_mismatched_matrix():
    traj = Trajectory(TimeGrid(1.0, 3), np.eye(4))
    corr = build_correlation(traj)
    other = Trajectory(TimeGrid(1.0, 4), np.ones((5, 4)))
    with pytest.raises(InvalidArgument):
        compute_pod(corr, other)


def test_identity_space_is_euclidean():
    rows = np.random.default_rng(0).standard_normal((4, 3))
    space = HilbertSpace.identity(3)
    np.testing.assert_allclose(space.norms(rows), np.linalg.norm(rows, axis=1))


def test_identity_slack_scales_with_data_size():
    assert InequalityReport.identity("energy_identity", 2e-9, 1e-9, scale=1e6).passed
    assert not InequalityReport.identity("energy_identity", 2e-9, 1e-9).passed
    assert InequalityReport.identity("energy_identity", 1e-9, 0.0, scale=1e6).passed
