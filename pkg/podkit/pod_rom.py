"""POD-Galerkin reduced heat solver, measured errors and the evaluated error bounds."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as la

from podkit.grids_sequences import (
    QUAD_POINTS,
    Sampler,
    difference_quotients,
    sample_derivatives,
    seq_norm0,
    squared_derivative_integrals,
)
from podkit.inequality_lab import C_A, c_m
from podkit.models import (
    Bdf2Start,
    GramKind,
    HilbertSpace,
    InequalityReport,
    InvalidArgument,
    MeshKind,
    NumericFailure,
    PodBasis,
    Scheme,
    TimeGrid,
    Trajectory,
)
from podkit.pde_fem import (
    FeProblem,
    Forcing,
    assemble_fe,
    heat_forcing,
    manufactured_trajectory,
    periodic_spec,
    poincare_constant,
    smooth_spec,
)
from podkit.pod_core import (
    coefficients,
    cross_norm_tail,
    degraded_bound,
    mode_norms,
    pod_from_trajectory,
    project,
    projection_error_series,
    residual,
    sigma_tail,
)

logger = logging.getLogger(__name__)

BOUND_REL = 1e-10
BOUND_ABS = 1e-14
DEFAULT_M_LIST = (2, 3, 4, 5)


@dataclass
class RomConfig:
    scheme: Scheme = Scheme.EULER
    r: int = 1
    bdf2_start: Bdf2Start = Bdf2Start.PROJECT
    grid: Optional[TimeGrid] = None
    nu: Optional[float] = None

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        self.bdf2_start = Bdf2Start(self.bdf2_start)
        if self.r < 0:
            raise InvalidArgument(f"r must be >= 0, got {self.r}")


@dataclass(eq=False)
class RomResult:
    """Reduced coefficients, reconstructed solution and the error series of one ROM run."""

    config: RomConfig
    coefficients: np.ndarray
    solution: np.ndarray
    l2_errors: np.ndarray
    gap: np.ndarray
    gap_norms: np.ndarray
    energy: np.ndarray
    energy_dominates: List[bool] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return float(self.l2_errors.max())

    def to_dict(self) -> dict:
        finite = lambda a: [float(x) if math.isfinite(x) else None for x in a]
        return {
            "scheme": self.config.scheme.value,
            "bdf2_start": self.config.bdf2_start.value,
            "r": self.config.r,
            "max_l2_error": self.max_error,
            "l2_errors": finite(self.l2_errors),
            "gap_norms": finite(self.gap_norms),
            "energy": finite(self.energy),
            "energy_dominates": self.energy_dominates,
        }


def _require_stiffness(basis: PodBasis):
    if basis.space.kind is not GramKind.STIFFNESS:
        raise InvalidArgument(f"Ritz projection needs a stiffness-Gram basis, got {basis.space.kind.value}")


def _cho(matrix: np.ndarray, what: str):
    try:
        return la.cho_factor(matrix)
    except la.LinAlgError as e:
        raise NumericFailure(f"{what} is not positive definite: {e}") from e


def ritz_project(p: FeProblem, basis: PodBasis, r: int, v: np.ndarray) -> np.ndarray:
    """R_r v: the stiffness-orthogonal projection onto span(phi^1..phi^r)."""
    _require_stiffness(basis)
    if r < 0 or r > basis.J:
        raise InvalidArgument(f"retained modes r={r} outside 0..{basis.J}")
    v = np.asarray(v, dtype=float)
    if r == 0:
        return np.zeros_like(v)
    phi = basis.modes[:r]
    kr = phi @ (p.stiffness @ phi.T)
    c = la.cho_solve(_cho(kr, "reduced stiffness"), phi @ (p.stiffness @ v))
    return c @ phi


def _ritz_coefficients(p: FeProblem, phi: np.ndarray, v: np.ndarray) -> np.ndarray:
    kr = phi @ (p.stiffness @ phi.T)
    return la.cho_solve(_cho(kr, "reduced stiffness"), phi @ (p.stiffness @ v))


def rom_solve(
    p: FeProblem,
    basis: PodBasis,
    cfg: RomConfig,
    forcing: Optional[Forcing],
    reference: Trajectory,
) -> RomResult:
    """Run the reduced backward Euler or BDF2 scheme and measure it against `reference`."""
    grid = cfg.grid or reference.grid
    if grid != reference.grid:
        raise InvalidArgument("reference trajectory is on a different time grid")
    if cfg.r > basis.J:
        raise InvalidArgument(f"r={cfg.r} exceeds the basis rank {basis.J}")
    if basis.mean is not None:
        raise InvalidArgument("the reduced solver needs a basis built without mean subtraction")
    if reference.dim != p.dofs:
        raise InvalidArgument(f"reference has {reference.dim} dofs, problem has {p.dofs}")
    nu = p.nu if cfg.nu is None else cfg.nu
    r, dt, M = cfg.r, grid.tau, grid.M
    phi = basis.modes[:r]
    u = reference.values
    mass_space = p.space(GramKind.MASS)

    coef = np.zeros((M + 1, r))
    if r > 0:
        mr = phi @ (p.mass @ phi.T)
        kr = phi @ (p.stiffness @ phi.T)
        load = (lambda t: np.zeros(p.dofs)) if forcing is None else forcing
        reduced_load = lambda n: phi @ load(n * dt)
        euler = _cho(mr + dt * nu * kr, "reduced Euler matrix")
        projected = coefficients(basis, r, u[:2])

        if cfg.scheme is Scheme.EULER:
            coef[0] = _ritz_coefficients(p, phi, u[0])
            start = 1
        elif cfg.bdf2_start is Bdf2Start.PROJECT:
            coef[0], coef[1] = projected
            start = 2
        else:
            coef[0] = _ritz_coefficients(p, phi, u[0])
            coef[1] = la.cho_solve(euler, mr @ coef[0] + dt * reduced_load(1))
            start = 2

        if cfg.scheme is Scheme.EULER:
            for n in range(start, M + 1):
                coef[n] = la.cho_solve(euler, mr @ coef[n - 1] + dt * reduced_load(n))
        else:
            bdf2 = _cho(1.5 * mr + dt * nu * kr, "reduced BDF2 matrix")
            for n in range(start, M + 1):
                history = mr @ (2.0 * coef[n - 1] - 0.5 * coef[n - 2])
                coef[n] = la.cho_solve(bdf2, history + dt * reduced_load(n))

    solution = coef @ phi
    l2_errors = mass_space.norms(solution - u)
    gap = (coef - coefficients(basis, r, u)) @ phi
    gap_norms = mass_space.norms(gap)

    energy = np.full(M + 1, np.nan)
    dominates: List[bool] = []
    if cfg.scheme is Scheme.BDF2:
        energy[1:] = 0.5 * np.sqrt(gap_norms[1:] ** 2 + mass_space.norms(2.0 * gap[1:] - gap[:-1]) ** 2)
        slack = 1e-12 * max(float(gap_norms.max()), 1e-300)
        if np.any(gap_norms[1:] > 2.0 * energy[1:] + slack):
            raise NumericFailure("BDF2 energy quantity fails ||e|| <= 2 E_n")
        dominates = [bool(x <= e + slack) for x, e in zip(gap_norms[1:], energy[1:])]
    logger.debug("ROM %s r=%d: max L2 error %.3e", cfg.scheme.value, r, float(l2_errors.max()))
    return RomResult(cfg, coef, solution, l2_errors, gap, gap_norms, energy, dominates)


def truncation_series(
    basis: PodBasis,
    r: int,
    reference: Trajectory,
    dt_sampler: Sampler,
    measure: Optional[HilbertSpace] = None,
) -> np.ndarray:
    """||D P_X^r u^n - d_t u(t_n)|| for n = 1..M."""
    measure = measure or reference.space
    grid = reference.grid
    projected = project(basis, r, reference.values)
    derivative = sample_derivatives(dt_sampler, grid.nodes[1:], 1)[1]
    tau_n = difference_quotients(projected, grid.tau, 1) - derivative
    return measure.norms(tau_n)


def residual_sampler(basis: PodBasis, r: int, sampler: Sampler) -> Sampler:
    """Sampler of (I - P_X^r) d^k u / dt^k; order 0 has the basis mean removed first."""

    def sample(times: np.ndarray, order: int) -> np.ndarray:
        values = sample_derivatives(sampler, times, order).copy()
        if basis.mean is not None:
            values[0] -= basis.mean
        out = np.empty_like(values)
        for k in range(order + 1):
            out[k] = residual(basis, r, values[k])
        return out

    return sample


@dataclass
class BoundReport:
    """Evaluated right-hand sides of every pointwise and averaged bound, with their measured counterparts."""

    r: int
    periodic: bool
    space_kind: str
    entries: List[InequalityReport] = field(default_factory=list)
    measured: Dict[str, float] = field(default_factory=dict)
    quantities: Dict[str, float] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def get(self, name: str, m: Optional[int] = None) -> InequalityReport:
        for entry in self.entries:
            if entry.lemma_id == name and (m is None or entry.params.get("m") == m):
                return entry
        raise KeyError(f"{name} (m={m})")

    def to_dict(self) -> dict:
        rows = []
        for entry in self.entries:
            row = entry.to_dict()
            row["overestimation"] = entry.overestimation if math.isfinite(entry.overestimation) else None
            rows.append(row)
        return {
            "r": self.r,
            "periodic": self.periodic,
            "space": self.space_kind,
            "all_passed": self.all_passed,
            "measured": self.measured,
            "quantities": self.quantities,
            "bounds": rows,
        }


def _dq_error(rows: np.ndarray, tau: float, space: HilbertSpace) -> float:
    return seq_norm0(difference_quotients(rows, tau, 1), tau, space=space)


def bound_report(
    p: FeProblem,
    basis: PodBasis,
    r: int,
    reference: Trajectory,
    dt_sampler: Sampler,
    m_list: Sequence[int] = DEFAULT_M_LIST,
    scheme=None,
    forcing: Optional[Forcing] = None,
    quad_points: int = QUAD_POINTS,
) -> BoundReport:
    """Evaluate every bound for P_X^r on `reference` and compare with the measured errors.

    The heat bound is added when the basis is built in the stiffness inner
    product and both a scheme and a forcing are given.
    """
    if r < 0 or r > basis.J:
        raise InvalidArgument(f"retained modes r={r} outside 0..{basis.J}")
    grid = reference.grid
    T, M, tau = grid.T, grid.M, grid.tau
    periodic = reference.periodic
    hi = M - 1 if periodic else M
    for m in m_list:
        if not 1 <= m <= hi:
            raise InvalidArgument(f"m={m} outside the admissible range 1..{hi}")
    X = basis.space
    W = p.space(GramKind.MASS)
    stiffness_basis = X.kind is GramKind.STIFFNESS

    tails = sigma_tail(basis)
    S = float(tails[r] ** 2)
    S_w = cross_norm_tail(basis, r, W)

    rows = reference.values if basis.mean is None else reference.values - basis.mean
    res_rows = residual(basis, r, rows)
    used = res_rows[1:] if periodic else res_rows
    err_x = X.norms(res_rows)
    err_w = W.norms(res_rows)
    measured = {
        "max_projection_error_X": float(err_x.max()),
        "max_projection_error_W": float(err_w.max()),
        "dq_projection_error_X": _dq_error(res_rows, tau, X),
        "dq_projection_error_W": _dq_error(res_rows, tau, W),
    }
    zero_mean = X.norm(used.mean(axis=0)) <= 1e-12 * max(float(err_x.max()), 1e-300)
    tail_x = 0.0 if zero_mean else math.sqrt(S) / math.sqrt(T)
    tail_w = 0.0 if zero_mean else math.sqrt(S_w) / math.sqrt(T)

    scheme = Scheme(scheme) if scheme is not None else None
    p_order = 1 if scheme is Scheme.EULER else 2
    top = max(list(m_list) + [p_order + 1])
    res = residual_sampler(basis, r, dt_sampler)
    I_x = squared_derivative_integrals(res, T, top, quad_points, X)
    I_w = squared_derivative_integrals(res, T, top, quad_points, W)

    def H(integrals: np.ndarray, m: int) -> float:
        k = np.arange(1, m + 1)
        return math.sqrt(float(T ** (-2.0 * (m - k)) @ integrals[1 : m + 1]))

    def Q(integrals: np.ndarray, m: int) -> float:
        return math.sqrt(float(integrals[m]))

    report = BoundReport(r, periodic, X.kind.value, measured=measured)
    report.quantities = {"tail_sq": S, "tail_sq_W": S_w, "T": T, "M": M, "mean_term_X": tail_x}

    def add(name: str, lhs: float, rhs: float, **params):
        report.entries.append(InequalityReport.evaluate(name, lhs, rhs, params, BOUND_REL, BOUND_ABS))

    max_x, max_w = measured["max_projection_error_X"], measured["max_projection_error_W"]
    dq_x, dq_w = measured["dq_projection_error_X"], measured["dq_projection_error_W"]

    add("degraded_baseline", max_x, degraded_bound(basis, r))
    add("thm1", max_x, C_A * S ** 0.25 * math.sqrt(Q(I_x, 1)) + tail_x)

    c_p = poincare_constant(p) if stiffness_basis else None
    if c_p is not None:
        report.quantities["poincare_constant"] = c_p

    rom = None
    if scheme is not None and forcing is not None and stiffness_basis and basis.mean is None:
        rom = rom_solve(p, basis, RomConfig(scheme, r), forcing, reference)
        measured["max_rom_error"] = rom.max_error
        u_top = squared_derivative_integrals(dt_sampler, T, p_order + 1, quad_points, W)
        report.quantities["time_error_norm"] = math.sqrt(float(u_top[p_order + 1]))

    for m in m_list:
        cm = c_m(m)
        hx, hw = H(I_x, m), H(I_w, m)
        qx, qw = Q(I_x, m), Q(I_w, m)
        a, b = 0.5 - 1.0 / (4 * m), (m - 1) / (2 * m)
        add("thm2", max_x, math.sqrt(2) * C_A * math.sqrt(cm) * S ** a * hx ** (1 / (2 * m)) + tail_x, m=m, c_m=cm)
        add("thm3", dq_x, 2 * cm * S ** b * hx ** (1 / m), m=m, c_m=cm)
        if periodic:
            add("esti1", max_x, math.sqrt(2) * C_A * S ** a * qx ** (1 / (2 * m)) + tail_x, m=m)
            add("esti2", dq_x, 2 * S ** b * qx ** (1 / m), m=m)
            add("diferente1", max_w, math.sqrt(2) * C_A * S_w ** a * qw ** (1 / (2 * m)) + tail_w, m=m)
            add("diferente2", dq_w, 2 * S_w ** b * qw ** (1 / m), m=m)
            if stiffness_basis:
                add("rho", dq_w, 2 * c_p * S ** b * qx ** (1 / m), m=m)
                add("mu", dq_w, 2 * S_w ** b * qw ** (1 / m), m=m)
        else:
            add("diferente1", max_w, math.sqrt(2) * C_A * math.sqrt(cm) * S_w ** a * hw ** (1 / (2 * m)) + tail_w, m=m, c_m=cm)
            add("diferente2", dq_w, 2 * cm * S_w ** b * hw ** (1 / m), m=m, c_m=cm)
        if rom is not None and m >= 2:
            rhs = 4 * c_p * math.sqrt(T) * cm * S ** b * hx ** (1 / m)
            rhs += math.sqrt(2) * c_p * C_A * math.sqrt(cm) * S ** a * hx ** (1 / (2 * m))
            rhs += math.sqrt(S) / math.sqrt(T)
            rhs += math.sqrt(p_order + 3) * tau ** p_order * math.sqrt(T) * report.quantities["time_error_norm"]
            add("thm_heat", rom.max_error, rhs, m=m, p=p_order, scheme=scheme.value)

    failed = [f"{e.lemma_id}(m={e.params.get('m')})" for e in report.entries if not e.passed]
    if failed:
        logger.warning("Violated bounds at r=%d: %s", r, ", ".join(failed))
    return report


def _nondegradation_point(args) -> dict:
    M, r, cells, modes, T, space_kind = args
    p = assemble_fe(MeshKind.INTERVAL, cells)
    spec = periodic_spec(modes, T)
    traj, _ = manufactured_trajectory(spec, p, TimeGrid(T, M), p.space(space_kind))
    basis = pod_from_trajectory(traj, drop_first=True, subtract_mean=True)
    if r > basis.J:
        raise InvalidArgument(f"r={r} exceeds the basis rank {basis.J} at M={M}")
    errors = projection_error_series(basis, r, traj)
    return {
        "M": M,
        "r": r,
        "J": basis.J,
        "max_projection_error": errors.maximum,
        "tail": float(sigma_tail(basis)[r]),
        "degraded_bound": degraded_bound(basis, r),
    }


def nondegradation_sweep(
    grids: Sequence[int] = (64, 128, 256, 512),
    r: int = 8,
    cells: int = 16,
    modes: int = 6,
    T: float = 1.0,
    space_kind=GramKind.MASS,
    workers: Optional[int] = None,
) -> List[dict]:
    """Max pointwise projection error at fixed r as the snapshot count grows."""
    points = [(int(M), r, cells, modes, T, GramKind(space_kind)) for M in grids]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(_nondegradation_point, points))
    logger.info("Non-degradation sweep done over %d grids", len(rows))
    return rows


def _convergence_point(args) -> dict:
    M, scheme, p, spec, basis, T = args
    grid = TimeGrid(T, M)
    reference, _ = manufactured_trajectory(spec, p, grid, p.space(GramKind.STIFFNESS))
    result = rom_solve(p, basis, RomConfig(scheme, basis.J), heat_forcing(p, spec), reference)
    return {"M": M, "dt": grid.tau, "scheme": Scheme(scheme).value, "max_l2_error": result.max_error}


def convergence_study(
    scheme,
    levels: Sequence[int] = (128, 256, 512, 1024, 2048),
    cells: int = 16,
    nu: float = 0.1,
    T: float = 1.0,
    workers: Optional[int] = None,
) -> List[dict]:
    """Temporal convergence of the full-rank ROM on a manufactured heat solution."""
    scheme = Scheme(scheme)
    p = assemble_fe(MeshKind.INTERVAL, cells, nu=nu)
    spec = smooth_spec()
    coarse, _ = manufactured_trajectory(spec, p, TimeGrid(T, int(levels[0])), p.space(GramKind.STIFFNESS))
    basis = pod_from_trajectory(coarse)
    points = [(int(M), scheme, p, spec, basis, T) for M in levels]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(_convergence_point, points))
    for prev, row in zip(rows, rows[1:]):
        row["observed_order"] = math.log(prev["max_l2_error"] / row["max_l2_error"]) / math.log(
            prev["dt"] / row["dt"]
        )
    return rows


def mode_norm_table(p: FeProblem, basis: PodBasis) -> List[dict]:
    """L2 norms of the modes of a stiffness-Gram basis next to the Poincare constant."""
    _require_stiffness(basis)
    c_p = poincare_constant(p)
    norms = mode_norms(basis, p.space(GramKind.MASS))
    return [{"k": k + 1, "l2_norm": float(v), "poincare_constant": c_p} for k, v in enumerate(norms)]
