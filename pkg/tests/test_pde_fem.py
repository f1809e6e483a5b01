import math

import numpy as np
import pytest

from podkit.models import Boundary, GramKind, InvalidArgument, MeshKind, TimeGrid
from podkit.pde_fem import (
    Exponential,
    Harmonic,
    PolynomialCoefficient,
    ProblemConfig,
    assemble_fe,
    assemble_p1,
    heat_forcing,
    heat_semidiscrete,
    interpolant_forcing,
    manufactured_trajectory,
    periodic_spec,
    poincare_constant,
    sine_profile,
    smallest_eigenpair,
    smooth_spec,
)


@pytest.mark.parametrize("kind", ["interval", "square"])
def test_full_matrices_integrate_constants(kind):
    p = assemble_fe(kind, 6)
    ones = np.ones(p.coords.shape[0])
    # the unit domain has measure one, constants have zero gradient
    assert ones @ (p.mass_full @ ones) == pytest.approx(1.0)
    np.testing.assert_allclose(p.stiffness_full @ ones, 0.0, atol=1e-12)


def test_free_matrices_symmetric_and_sized():
    p = assemble_fe(MeshKind.SQUARE, 5, Boundary.MIXED)
    assert p.dofs == 25
    assert abs(p.mass - p.mass.T).max() == 0
    assert abs(p.stiffness - p.stiffness.T).max() == 0
    assert assemble_fe("interval", 8).dofs == 7
    assert assemble_fe("interval", 8, "mixed").dofs == 8


def test_assemble_p1_rejects_inverted_element():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidArgument):
        assemble_p1(coords, np.array([[0, 2, 1]]))


@pytest.mark.parametrize("cells,nu", [(1, 1.0), (4, 0.0), (4, -2.0)])
def test_assemble_fe_rejects(cells, nu):
    with pytest.raises(InvalidArgument):
        assemble_fe("interval", cells, nu=nu)


def test_poincare_constant_interval():
    assert poincare_constant(assemble_fe("interval", 128)) == pytest.approx(1 / math.pi, rel=0.01)


def test_poincare_constant_mixed_square():
    p = assemble_fe("square", 32, "mixed")
    assert poincare_constant(p) == pytest.approx(math.sqrt(2) / math.pi, rel=0.03)


def test_smallest_eigenpair_is_mass_normalized():
    p = assemble_fe("interval", 20)
    lam, v = smallest_eigenpair(p.stiffness, p.mass)
    assert v @ (p.mass @ v) == pytest.approx(1.0)
    np.testing.assert_allclose(p.stiffness @ v, lam * (p.mass @ v), atol=1e-8 * lam)


def test_heat_modal_decay():
    p = assemble_fe("interval", 16, nu=0.05)
    lam, _ = smallest_eigenpair(p.stiffness, p.mass)
    u0 = sine_profile(1, p.coords)
    grid = TimeGrid(1.0, 8)
    traj = heat_semidiscrete(p, None, u0, grid, substeps=64)
    expected = np.exp(-p.nu * lam * grid.nodes)[:, None] * p.restrict(u0)
    np.testing.assert_allclose(traj.values, expected, rtol=1e-6, atol=1e-12)
    assert traj.space.kind is GramKind.MASS


def test_manufactured_forcing_reproduces_solution():
    p = assemble_fe("interval", 16)
    spec = smooth_spec()
    grid = TimeGrid(1.0, 16)
    exact, _ = manufactured_trajectory(spec, p, grid)
    computed = heat_semidiscrete(p, heat_forcing(p, spec), exact.values[0], grid)
    scale = float(exact.space.norms(exact.values).max())
    assert float(exact.space.norms(computed.values - exact.values).max()) <= 1e-4 * scale


def test_interpolant_forcing_matches_mass_action():
    p = assemble_fe("interval", 10)
    load = interpolant_forcing(p, lambda x, t: np.full(x.shape[0], t))
    ones = np.ones(p.coords.shape[0])
    np.testing.assert_allclose(load(2.0), 2.0 * (p.mass_full @ ones)[p.free])


def test_coefficient_derivatives():
    times = np.array([0.0, 0.3, 1.1])
    h = Harmonic(2.0, 3.0, 0.5).derivatives(times, 2)
    np.testing.assert_allclose(h[1], 6.0 * np.cos(3.0 * times + 0.5))
    np.testing.assert_allclose(h[2], -18.0 * np.sin(3.0 * times + 0.5))
    poly = PolynomialCoefficient([1.0, 0.0, 3.0]).derivatives(times, 3)
    np.testing.assert_allclose(poly[1], 6.0 * times)
    np.testing.assert_allclose(poly[3], 0.0)
    e = Exponential(2.0, -1.5).derivatives(times, 1)
    np.testing.assert_allclose(e[1], -3.0 * np.exp(-1.5 * times))


def test_periodicity_flags():
    assert Harmonic(1.0, 2 * math.pi).is_periodic(1.0)
    assert not Harmonic(1.0, 2.0).is_periodic(1.0)
    assert periodic_spec(3, 2.0).is_periodic(2.0)
    assert not smooth_spec().is_periodic(1.0)


def test_periodic_spec_trajectory_closes(interval):
    traj, sampler = manufactured_trajectory(periodic_spec(3, 1.0), interval, TimeGrid(1.0, 20))
    assert traj.periodic
    assert sampler(np.array([0.0, 0.5]), 2).shape == (3, 2, interval.dofs)


def test_square_profiles_vanish_on_dirichlet_boundary():
    p = assemble_fe("square", 6)
    profile = sine_profile(2, p.coords)
    boundary = np.setdiff1d(np.arange(p.coords.shape[0]), p.free)
    np.testing.assert_allclose(profile[boundary], 0.0, atol=1e-12)


def test_problem_config_round_trip():
    config = ProblemConfig(kind="square", cells=4, boundary="mixed", nu=0.3, T=2.0, M=12, periodic=False)
    again = ProblemConfig.from_dict(dict(config.to_dict(), schema="ignored"))
    assert again == config
    p, spec, grid = again.build()
    assert p.kind is MeshKind.SQUARE and grid.M == 12
    assert not spec.is_periodic(grid.T)
