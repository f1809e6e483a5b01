import math

import numpy as np
import pytest

from podkit.models import GramKind, TimeGrid
from podkit.pde_fem import assemble_fe, manufactured_trajectory, periodic_spec, smooth_spec


def scalar_sampler(func, derivative):
    """Sampler for f(t) = func(t) whose k-th derivative is derivative(k, t)."""

    def sample(times, order):
        times = np.asarray(times, dtype=float)
        return np.stack([func(times) if k == 0 else derivative(k, times) for k in range(order + 1)])

    return sample


def sine_sampler(frequency: float = 2.0 * math.pi, amplitude: float = 1.0):
    """Sampler of amplitude * sin(frequency t)."""
    return scalar_sampler(
        lambda t: amplitude * np.sin(frequency * t),
        lambda k, t: amplitude * frequency ** k * np.sin(frequency * t + k * math.pi / 2),
    )


@pytest.fixture(scope="module")
def interval():
    return assemble_fe("interval", 16)


@pytest.fixture(scope="module")
def periodic_case(interval):
    grid = TimeGrid(1.0, 64)
    spec = periodic_spec(3, 1.0)
    traj, sampler = manufactured_trajectory(spec, interval, grid, interval.space(GramKind.STIFFNESS))
    return interval, spec, traj, sampler


@pytest.fixture(scope="module")
def smooth_case(interval):
    grid = TimeGrid(1.0, 64)
    spec = smooth_spec()
    traj, sampler = manufactured_trajectory(spec, interval, grid, interval.space(GramKind.STIFFNESS))
    return interval, spec, traj, sampler
