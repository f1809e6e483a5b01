"""P1 finite elements for the heat equation: Gram operators, snapshot generators, manufactured data."""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import Polynomial

from podkit.grids_sequences import Sampler, sample_trajectory
from podkit.models import (
    Boundary,
    GramKind,
    HilbertSpace,
    InvalidArgument,
    MeshKind,
    NumericFailure,
    TimeGrid,
    Trajectory,
)

logger = logging.getLogger(__name__)

CN_SUBSTEPS = 32
EIG_TOL = 1e-10
EIG_MAX_ITER = 500


@dataclass(eq=False)
class FeProblem:
    kind: MeshKind
    cells: int
    boundary: Boundary
    nu: float
    coords: np.ndarray
    elements: np.ndarray
    free: np.ndarray
    mass_full: sp.csr_matrix
    stiffness_full: sp.csr_matrix
    mass: sp.csr_matrix = field(init=False)
    stiffness: sp.csr_matrix = field(init=False)

    def __post_init__(self):
        self.mass = _symmetric(self.mass_full[self.free][:, self.free])
        self.stiffness = _symmetric(self.stiffness_full[self.free][:, self.free])

    @property
    def dofs(self) -> int:
        return int(self.free.size)

    @property
    def free_coords(self) -> np.ndarray:
        return self.coords[self.free]

    def space(self, kind=GramKind.MASS) -> HilbertSpace:
        kind = GramKind(kind)
        if kind is GramKind.MASS:
            return HilbertSpace(self.mass, kind)
        if kind is GramKind.STIFFNESS:
            return HilbertSpace(self.stiffness, kind)
        return HilbertSpace.identity(self.dofs)

    def restrict(self, nodal: np.ndarray) -> np.ndarray:
        """Values on free dofs from values on every node (or pass free-dof values through)."""
        nodal = np.asarray(nodal, dtype=float)
        if nodal.shape[-1] == self.coords.shape[0]:
            return nodal[..., self.free]
        if nodal.shape[-1] == self.dofs:
            return nodal
        raise InvalidArgument(
            f"vector of length {nodal.shape[-1]} matches neither {self.coords.shape[0]} nodes nor {self.dofs} dofs"
        )


def _symmetric(a) -> sp.csr_matrix:
    a = sp.csr_matrix(a)
    return ((a + a.T) * 0.5).tocsr()


def _interval_mesh(n: int) -> Tuple[np.ndarray, np.ndarray]:
    coords = np.linspace(0.0, 1.0, n + 1)[:, None]
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return coords, elements


def _square_mesh(n: int) -> Tuple[np.ndarray, np.ndarray]:
    # node (i, j) sits at (i/n, j/n) with id j*(n+1) + i
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    coords = np.column_stack([ii.ravel() / n, jj.ravel() / n])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    elements = np.concatenate([
        np.column_stack([v00, v10, v11]),
        np.column_stack([v00, v11, v01]),
    ])
    return coords, elements


def _dirichlet_nodes(kind: MeshKind, boundary: Boundary, coords: np.ndarray) -> np.ndarray:
    on = lambda values, target: np.isclose(values, target, atol=1e-12)
    if kind is MeshKind.INTERVAL:
        x = coords[:, 0]
        mask = on(x, 1.0) if boundary is Boundary.MIXED else on(x, 0.0) | on(x, 1.0)
    else:
        x, y = coords[:, 0], coords[:, 1]
        mask = on(x, 1.0) | on(y, 1.0)
        if boundary is Boundary.ALL:
            mask |= on(x, 0.0) | on(y, 0.0)
    return np.flatnonzero(mask)


def assemble_p1(coords: np.ndarray, elements: np.ndarray) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """Mass and stiffness matrices of continuous P1 elements on a simplex mesh."""
    n_nodes, d = coords.shape
    verts = coords[elements]
    jac = np.transpose(verts[:, 1:] - verts[:, :1], (0, 2, 1))
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise InvalidArgument("mesh has degenerate or inverted elements")
    vol = np.abs(det) / math.factorial(d)
    grads_ref = np.vstack([-np.ones((1, d)), np.eye(d)])
    grads = grads_ref @ np.linalg.inv(jac)

    local_k = vol[:, None, None] * grads @ np.transpose(grads, (0, 2, 1))
    pattern = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    local_m = vol[:, None, None] * pattern

    rows = np.repeat(elements[:, :, None], d + 1, axis=2).ravel()
    cols = np.repeat(elements[:, None, :], d + 1, axis=1).ravel()
    shape = (n_nodes, n_nodes)
    mass = sp.coo_matrix((local_m.ravel(), (rows, cols)), shape=shape).tocsr()
    stiffness = sp.coo_matrix((local_k.ravel(), (rows, cols)), shape=shape).tocsr()
    return _symmetric(mass), _symmetric(stiffness)


def assemble_fe(kind, cells_per_side: int, dirichlet=Boundary.ALL, nu: float = 1.0) -> FeProblem:
    """Assemble the heat problem on the unit interval or the unit square."""
    kind, dirichlet = MeshKind(kind), Boundary(dirichlet)
    if cells_per_side < 2:
        raise InvalidArgument(f"need at least 2 cells per side, got {cells_per_side}")
    if not nu > 0:
        raise InvalidArgument(f"diffusivity must be positive, got {nu}")
    if kind is MeshKind.INTERVAL:
        coords, elements = _interval_mesh(cells_per_side)
    else:
        coords, elements = _square_mesh(cells_per_side)
    mass, stiffness = assemble_p1(coords, elements)
    fixed = _dirichlet_nodes(kind, dirichlet, coords)
    free = np.setdiff1d(np.arange(coords.shape[0]), fixed)
    logger.debug("Assembled %s mesh: %d nodes, %d free dofs", kind.value, coords.shape[0], free.size)
    return FeProblem(kind, cells_per_side, dirichlet, float(nu), coords, elements, free, mass, stiffness)


def smallest_eigenpair(
    stiffness, mass, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER
) -> Tuple[float, np.ndarray]:
    """Smallest eigenpair of stiffness v = lambda mass v by inverse iteration.

    The eigenvector is mass-normalized. Stops when
    ||K v - lambda M v|| <= tol * ||K v||.
    """
    try:
        lu = spla.splu(sp.csc_matrix(stiffness))
    except RuntimeError as e:
        raise NumericFailure(f"Stiffness factorization failed: {e}") from e
    v = np.ones(stiffness.shape[0])
    v /= math.sqrt(v @ (mass @ v))
    for iteration in range(1, max_iter + 1):
        w = lu.solve(mass @ v)
        v = w / math.sqrt(w @ (mass @ w))
        kv = stiffness @ v
        lam = float(v @ kv)
        res = np.linalg.norm(kv - lam * (mass @ v))
        if res <= tol * np.linalg.norm(kv):
            logger.debug("Inverse iteration converged in %d steps (lambda=%.12g)", iteration, lam)
            return lam, v
    raise NumericFailure(f"Inverse iteration did not converge in {max_iter} steps (residual {res:g})")


def poincare_constant(p: FeProblem) -> float:
    """C_P = lambda_min^(-1/2) for stiffness v = lambda mass v."""
    lam, _ = smallest_eigenpair(p.stiffness, p.mass)
    return 1.0 / math.sqrt(lam)


Forcing = Callable[[float], np.ndarray]


def heat_semidiscrete(
    p: FeProblem,
    forcing: Optional[Forcing],
    u0: np.ndarray,
    grid: TimeGrid,
    substeps: int = CN_SUBSTEPS,
) -> Trajectory:
    """Integrate M u' + nu K u = b(t) with Crank-Nicolson, `substeps` steps per snapshot interval."""
    if substeps < 1:
        raise InvalidArgument(f"substeps must be >= 1, got {substeps}")
    u = p.restrict(u0).astype(float).copy()
    dt = grid.tau / substeps
    lhs = sp.csc_matrix(p.mass + (0.5 * dt * p.nu) * p.stiffness)
    rhs_op = (p.mass - (0.5 * dt * p.nu) * p.stiffness).tocsr()
    try:
        lu = spla.splu(lhs)
    except RuntimeError as e:
        raise NumericFailure(f"Crank-Nicolson factorization failed: {e}") from e

    load = (lambda t: np.zeros(p.dofs)) if forcing is None else forcing
    values = np.empty((grid.M + 1, p.dofs))
    values[0] = u
    b_now = load(0.0)
    for n in range(grid.M):
        t0 = n * grid.tau
        for s in range(1, substeps + 1):
            b_next = load(t0 + s * dt)
            u = lu.solve(rhs_op @ u + 0.5 * dt * (b_now + b_next))
            b_now = b_next
        values[n + 1] = u
    return Trajectory(grid, values, p.space(GramKind.MASS))


class Harmonic:
    """a sin(omega t + phase)."""

    def __init__(self, amplitude: float, omega: float, phase: float = 0.0):
        self.amplitude = float(amplitude)
        self.omega = float(omega)
        self.phase = float(phase)

    def derivatives(self, times: np.ndarray, order: int) -> np.ndarray:
        k = np.arange(order + 1)[:, None]
        return self.amplitude * self.omega ** k * np.sin(self.omega * times[None, :] + self.phase + k * math.pi / 2)

    def is_periodic(self, T: float) -> bool:
        cycles = self.omega * T / (2.0 * math.pi)
        return abs(cycles - round(cycles)) <= 1e-9

    def to_dict(self) -> dict:
        return {"type": "harmonic", "amplitude": self.amplitude, "omega": self.omega, "phase": self.phase}


class PolynomialCoefficient:
    def __init__(self, coefficients: Sequence[float]):
        self.poly = Polynomial(list(coefficients))

    def derivatives(self, times: np.ndarray, order: int) -> np.ndarray:
        return np.stack([self.poly.deriv(k)(times) if k else self.poly(times) for k in range(order + 1)])

    def is_periodic(self, T: float) -> bool:
        return self.poly.degree() == 0

    def to_dict(self) -> dict:
        return {"type": "polynomial", "coefficients": [float(c) for c in self.poly.coef]}


class Exponential:
    """a exp(rate t)."""

    def __init__(self, amplitude: float, rate: float):
        self.amplitude = float(amplitude)
        self.rate = float(rate)

    def derivatives(self, times: np.ndarray, order: int) -> np.ndarray:
        k = np.arange(order + 1)[:, None]
        return self.amplitude * self.rate ** k * np.exp(self.rate * times[None, :])

    def is_periodic(self, T: float) -> bool:
        return self.rate == 0

    def to_dict(self) -> dict:
        return {"type": "exponential", "amplitude": self.amplitude, "rate": self.rate}


Coefficient = Union[Harmonic, PolynomialCoefficient, Exponential]
Profile = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


@dataclass(eq=False)
class ManufacturedSpec:
    """u(x, t) = sum_i a_i(t) profile_i(x)."""

    terms: Sequence[Tuple[Coefficient, Profile]]

    def profiles(self, p: FeProblem) -> np.ndarray:
        rows = []
        for _, profile in self.terms:
            nodal = profile(p.coords) if callable(profile) else profile
            rows.append(p.restrict(nodal))
        return np.array(rows).reshape(len(rows), p.dofs)

    def sampler(self, p: FeProblem) -> Sampler:
        shapes = self.profiles(p)
        coefficients = [coefficient for coefficient, _ in self.terms]

        def sample(times: np.ndarray, order: int) -> np.ndarray:
            times = np.asarray(times, dtype=float)
            amps = np.stack([c.derivatives(times, order) for c in coefficients], axis=-1)
            return amps @ shapes

        return sample

    def is_periodic(self, T: float) -> bool:
        return all(coefficient.is_periodic(T) for coefficient, _ in self.terms)


def manufactured_trajectory(
    spec: ManufacturedSpec, p: FeProblem, grid: TimeGrid, space: Optional[HilbertSpace] = None
) -> Tuple[Trajectory, Sampler]:
    """Exact snapshots of a manufactured function and its derivative sampler."""
    sampler = spec.sampler(p)
    traj = sample_trajectory(sampler, grid, space or p.space(GramKind.MASS), spec.is_periodic(grid.T))
    return traj, sampler


def heat_forcing(p: FeProblem, spec: ManufacturedSpec) -> Forcing:
    """b(t) = M u'(t) + nu K u(t), making the manufactured u the exact semidiscrete solution."""
    sampler = spec.sampler(p)

    def load(t: float) -> np.ndarray:
        values = sampler(np.array([t]), 1)[:, 0, :]
        return p.mass @ values[1] + p.nu * (p.stiffness @ values[0])

    return load


def interpolant_forcing(p: FeProblem, f: Callable[[np.ndarray, float], np.ndarray]) -> Forcing:
    """b(t) = (M_full f(., t))[free] for a nodal source function f(coords, t)."""

    def load(t: float) -> np.ndarray:
        return (p.mass_full @ np.asarray(f(p.coords, t), dtype=float))[p.free]

    return load


def sine_profile(frequency: int, coords: np.ndarray) -> np.ndarray:
    """sin(frequency pi x), times sin(pi y) on the square."""
    values = np.sin(frequency * math.pi * coords[:, 0])
    if coords.shape[1] == 2:
        values = values * np.sin(math.pi * coords[:, 1])
    return values


def periodic_spec(modes: int = 3, T: float = 1.0, decay: float = 0.5) -> ManufacturedSpec:
    """Smooth T-periodic trajectory of rank 2*modes with distinct singular values."""
    if modes < 1:
        raise InvalidArgument(f"modes must be >= 1, got {modes}")
    terms = []
    for k in range(1, modes + 1):
        omega = 2.0 * math.pi * k / T
        terms.append((Harmonic(decay ** k, omega), lambda x, f=2 * k - 1: sine_profile(f, x)))
        terms.append((Harmonic(0.7 * decay ** k, omega, math.pi / 2), lambda x, f=2 * k: sine_profile(f, x)))
    return ManufacturedSpec(terms)


def smooth_spec(rate: float = -1.0) -> ManufacturedSpec:
    """Non-periodic two-mode trajectory used by the convergence studies."""
    return ManufacturedSpec([
        (Exponential(1.0, rate), lambda x: sine_profile(1, x)),
        (Harmonic(0.5, math.pi), lambda x: sine_profile(2, x)),
    ])


@dataclass
class ProblemConfig:
    """Everything needed to rebuild an FE problem and its manufactured data."""

    kind: str = MeshKind.INTERVAL.value
    cells: int = 16
    boundary: str = Boundary.ALL.value
    nu: float = 1.0
    T: float = 1.0
    M: int = 64
    periodic: bool = True
    modes: int = 3
    decay: float = 0.5
    rate: float = -1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemConfig":
        """Create a config from its JSON form."""
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def spec(self) -> ManufacturedSpec:
        return periodic_spec(self.modes, self.T, self.decay) if self.periodic else smooth_spec(self.rate)

    def build(self) -> Tuple[FeProblem, ManufacturedSpec, TimeGrid]:
        p = assemble_fe(self.kind, self.cells, self.boundary, self.nu)
        return p, self.spec(), TimeGrid(float(self.T), int(self.M))
