import math

import numpy as np
import pytest

from podkit.models import Bdf2Start, GramKind, InvalidArgument, Scheme, TimeGrid, Trajectory
from podkit.pde_fem import assemble_fe, heat_forcing, manufactured_trajectory, sine_profile, smooth_spec
from podkit.pod_core import pod_from_trajectory, project, projection_error_series
from podkit.pod_rom import (
    RomConfig,
    bound_report,
    convergence_study,
    mode_norm_table,
    nondegradation_sweep,
    residual_sampler,
    ritz_project,
    rom_solve,
    truncation_series,
)

M_LIST = (2, 3, 4, 5)


def test_ritz_projection_matches_stiffness_projection(periodic_case):
    p, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    np.testing.assert_allclose(ritz_project(p, basis, 3, traj.values), project(basis, 3, traj.values), atol=1e-10)
    np.testing.assert_array_equal(ritz_project(p, basis, 0, traj.values), 0.0)


def test_ritz_projection_needs_stiffness_basis(periodic_case):
    p, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj.with_space(p.space(GramKind.MASS)))
    with pytest.raises(InvalidArgument):
        ritz_project(p, basis, 2, traj.values)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_full_rank_rom_tracks_manufactured_solution(smooth_case, scheme):
    p, spec, traj, _ = smooth_case
    basis = pod_from_trajectory(traj)
    result = rom_solve(p, basis, RomConfig(scheme, basis.J), heat_forcing(p, spec), traj)
    assert result.l2_errors[0] <= 1e-12
    assert result.max_error < 5e-2
    assert result.coefficients.shape == (traj.grid.M + 1, basis.J)


def test_bdf2_energy_quantity(smooth_case):
    p, spec, traj, _ = smooth_case
    basis = pod_from_trajectory(traj)
    result = rom_solve(p, basis, RomConfig(Scheme.BDF2, 1), heat_forcing(p, spec), traj)
    assert np.isnan(result.energy[0])
    assert np.all(result.gap_norms[1:] <= 2 * result.energy[1:] * (1 + 1e-12) + 1e-300)
    assert len(result.energy_dominates) == traj.grid.M


def test_bdf2_euler_start_differs_from_projection_start(smooth_case):
    p, spec, traj, _ = smooth_case
    basis = pod_from_trajectory(traj)
    forcing = heat_forcing(p, spec)
    projected = rom_solve(p, basis, RomConfig(Scheme.BDF2, 2, Bdf2Start.PROJECT), forcing, traj)
    euler = rom_solve(p, basis, RomConfig(Scheme.BDF2, 2, Bdf2Start.EULER_STEP), forcing, traj)
    assert euler.l2_errors[1] > projected.l2_errors[1]
    assert euler.to_dict()["bdf2_start"] == "euler_step"


def test_rom_rejects_bad_inputs(smooth_case):
    p, spec, traj, _ = smooth_case
    centered = pod_from_trajectory(traj, subtract_mean=True)
    with pytest.raises(InvalidArgument):
        rom_solve(p, centered, RomConfig(Scheme.EULER, 1), heat_forcing(p, spec), traj)
    basis = pod_from_trajectory(traj)
    with pytest.raises(InvalidArgument):
        rom_solve(p, basis, RomConfig(Scheme.EULER, basis.J + 1), heat_forcing(p, spec), traj)
    with pytest.raises(InvalidArgument):
        RomConfig(Scheme.EULER, -1)


def test_convergence_orders():
    euler = convergence_study(Scheme.EULER, levels=(64, 128, 256, 512))
    bdf2 = convergence_study(Scheme.BDF2, levels=(64, 128, 256, 512))
    assert euler[-1]["observed_order"] == pytest.approx(1.0, abs=0.15)
    assert bdf2[-1]["observed_order"] == pytest.approx(2.0, abs=0.2)
    assert [row["M"] for row in euler] == [64, 128, 256, 512]
    assert "observed_order" not in euler[0]


def test_nondegradation_property():
    rows = nondegradation_sweep((64, 128, 256, 512), r=8)
    errors = [row["max_projection_error"] for row in rows]
    assert max(errors) / min(errors) < 2.0
    growth = rows[-1]["degraded_bound"] / rows[0]["degraded_bound"]
    assert growth == pytest.approx(math.sqrt(512 / 64), rel=0.05)
    assert all(row["max_projection_error"] <= row["degraded_bound"] for row in rows)


def test_periodic_bounds_dominate_measured_errors(periodic_case):
    p, spec, traj, sampler = periodic_case
    basis = pod_from_trajectory(traj, drop_first=True)
    report = bound_report(p, basis, 3, traj, sampler, M_LIST, Scheme.EULER, heat_forcing(p, spec))
    names = {entry.lemma_id for entry in report.entries}
    assert {"thm1", "thm2", "thm3", "esti1", "esti2", "diferente1", "diferente2", "rho", "mu", "thm_heat"} <= names
    failed = [entry.to_dict() for entry in report.entries if not entry.passed]
    assert not failed, failed
    assert report.get("thm2", 3).params["c_m"] > 0
    assert report.to_dict()["all_passed"]
    assert report.quantities["poincare_constant"] == pytest.approx(1 / math.pi, rel=0.01)


def test_general_bounds_dominate_measured_errors(smooth_case):
    p, spec, traj, sampler = smooth_case
    basis = pod_from_trajectory(traj)
    report = bound_report(p, basis, 1, traj, sampler, M_LIST, Scheme.BDF2, heat_forcing(p, spec))
    assert report.all_passed, [e.to_dict() for e in report.entries if not e.passed]
    assert "esti1" not in {entry.lemma_id for entry in report.entries}
    assert report.get("thm_heat", 2).params["p"] == 2


def test_bound_report_rejects_inadmissible_order(periodic_case):
    p, _, traj, sampler = periodic_case
    basis = pod_from_trajectory(traj, drop_first=True)
    with pytest.raises(InvalidArgument):
        bound_report(p, basis, 2, traj, sampler, (traj.grid.M,))


def test_truncation_series_vanishes_at_full_rank_for_linear_data():
    p = assemble_fe("interval", 8)
    grid = TimeGrid(1.0, 10)
    profile = np.linspace(0.1, 0.9, p.dofs)

    def sampler(times, order):
        out = np.zeros((order + 1, len(times), p.dofs))
        out[0] = times[:, None] * profile
        if order >= 1:
            out[1] = profile
        return out

    traj, _ = manufactured_trajectory(smooth_spec(), p, grid)
    linear = traj.with_values(grid.nodes[:, None] * profile)
    basis = pod_from_trajectory(linear)
    np.testing.assert_allclose(truncation_series(basis, basis.J, linear, sampler), 0.0, atol=1e-10)


def test_residual_sampler_is_orthogonal_to_modes(periodic_case):
    _, _, traj, sampler = periodic_case
    basis = pod_from_trajectory(traj)
    res = residual_sampler(basis, 2, sampler)(np.linspace(0, 1, 5), 1)
    gram = basis.space.apply(res[1]) @ basis.modes[:2].T
    np.testing.assert_allclose(gram, 0.0, atol=1e-10)


def test_mode_norm_table(periodic_case):
    p, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj)
    rows = mode_norm_table(p, basis)
    assert [row["k"] for row in rows] == list(range(1, basis.J + 1))
    # L2 norms of H1_0-normalized modes are bounded by the Poincare constant
    assert all(row["l2_norm"] <= row["poincare_constant"] * (1 + 1e-9) for row in rows)


def test_projection_errors_in_second_norm(periodic_case):
    p, _, traj, _ = periodic_case
    basis = pod_from_trajectory(traj, drop_first=True)
    in_l2 = projection_error_series(basis, 2, traj, p.space(GramKind.MASS))
    in_h1 = projection_error_series(basis, 2, traj)
    assert np.all(in_l2.errors <= in_h1.errors / math.pi * 1.01 + 1e-15)


def steady_profile(p):
    return p.restrict(sine_profile(1, p.coords))


@pytest.mark.parametrize("start", list(Bdf2Start))
@pytest.mark.parametrize("scheme", list(Scheme))
def test_steady_state_is_reproduced_exactly(interval, scheme, start):
    v = steady_profile(interval)
    grid = TimeGrid(1.0, 12)
    reference = Trajectory(grid, np.tile(v, (grid.M + 1, 1)), interval.space(GramKind.STIFFNESS))
    basis = pod_from_trajectory(reference)
    assert basis.J == 1
    load = interval.nu * (interval.stiffness @ v)
    result = rom_solve(interval, basis, RomConfig(scheme, 1, start), lambda t: load, reference)
    scale = interval.space(GramKind.MASS).norm(v)
    assert result.l2_errors.max() <= 1e-10 * scale
    assert result.gap_norms.max() <= 1e-10 * scale


@pytest.mark.parametrize("scheme", list(Scheme))
def test_zero_data_gives_zero_reduced_solution(smooth_case, scheme):
    p, _, traj, _ = smooth_case
    basis = pod_from_trajectory(traj)
    zero = traj.with_values(np.zeros_like(traj.values))
    result = rom_solve(p, basis, RomConfig(scheme, basis.J), None, zero)
    np.testing.assert_array_equal(result.coefficients, 0.0)
    np.testing.assert_array_equal(result.l2_errors, 0.0)


def polynomial_in_time(v, power):
    def sampler(times, order):
        out = np.zeros((order + 1, len(times), v.shape[0]))
        for k in range(min(order, power) + 1):
            out[k] = math.factorial(power) / math.factorial(power - k) * times[:, None] ** (power - k) * v
        return out

    return sampler


@pytest.mark.parametrize("kind", [GramKind.MASS, GramKind.STIFFNESS])
@pytest.mark.parametrize("M", [8, 32])
def test_truncation_of_quadratic_in_time(interval, kind, M):
    v = steady_profile(interval)
    grid = TimeGrid(1.0, M)
    reference = Trajectory(grid, grid.nodes[:, None] ** 2 * v, interval.space(kind))
    basis = pod_from_trajectory(reference)
    measure = interval.space(GramKind.MASS)
    series = truncation_series(basis, 1, reference, polynomial_in_time(v, 2), measure)
    assert series.shape == (M,)
    np.testing.assert_allclose(series, grid.tau * measure.norm(v), rtol=1e-8)


@pytest.mark.parametrize("kind", [GramKind.MASS, GramKind.STIFFNESS])
def test_truncation_of_constant_reference_vanishes(interval, kind):
    v = steady_profile(interval)
    grid = TimeGrid(1.0, 10)
    reference = Trajectory(grid, np.tile(v, (grid.M + 1, 1)), interval.space(kind))
    basis = pod_from_trajectory(reference)
    series = truncation_series(basis, 1, reference, polynomial_in_time(v, 0))
    np.testing.assert_allclose(series, 0.0, atol=1e-12 * reference.space.norm(v))
