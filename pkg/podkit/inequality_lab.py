"""Explicit constants and numerical checks of the discrete Agmon/interpolation inequalities."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from podkit.grids_sequences import (
    QUAD_POINTS,
    Sampler,
    dq,
    dq_norm0,
    sample_trajectory,
    seq_norm0,
    shift_sampler,
    time_l2_norm,
    time_sobolev_norm,
    weighted_dq_norm,
)
from podkit.models import (
    GENERAL_LEMMAS,
    PERIODIC_LEMMAS,
    HilbertSpace,
    InequalityReport,
    InvalidArgument,
    Lemma,
    NumericFailure,
    SeqNormKind,
    TheoremVariant,
    TimeGrid,
    Trajectory,
)

logger = logging.getLogger(__name__)

C_A = math.sqrt(2.0 + math.sqrt(2.0) / 2.0)
C_A1 = (1.0 + (math.sqrt(2.0) * C_A) ** (4.0 / 3.0)) ** 0.75
C_B1 = 2.0 * math.sqrt(1.0 + 2.0 * (C_A * C_A1) ** 2)
EXP_FACTOR = math.exp(1.0 + 1.0 / math.e)

# largest natural log that still converts to a finite double
_LOG_MAX = math.log(np.finfo(float).max)

# published c_m values the recursion is compared against
REFERENCE_C_M = {
    2: 9.558, 3: 33.17, 4: 67.26, 5: 103.7, 6: 137.7, 7: 167.5, 8: 193.0,
    9: 214.7, 10: 233.4, 100: 432.7, 1000: 458.5, 10000: 461.1, 100000: 461.4,
}
REPRODUCE_TOL = 0.005

# values of Theorem-style checks measured against quadrature carry their own slack
QUADRATURE_REL = 1e-8
QUADRATURE_ABS = 1e-8


class Reading(Enum):
    PRINTED = "printed"
    HALVED = "halved"


class D0Seed(Enum):
    C_B1 = "c_B1"
    C_B1_OVER_SQRT2 = "c_B1_over_sqrt2"


def base_constants() -> Tuple[float, float, float]:
    """(c_A, c_A1, c_B1)."""
    return C_A, C_A1, C_B1


def _log1p_exp(x: float) -> float:
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _d0(seed: D0Seed) -> float:
    return C_B1 if seed is D0Seed.C_B1 else C_B1 / math.sqrt(2.0)


@lru_cache(maxsize=16)
def _log_tables(jmax: int, reading: Reading, seed: D0Seed) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ln hat_c_j, ln hat_d_j for j = 0..jmax and ln c_m for m = 0..jmax+2 (index 0 unused)."""
    log_c = np.empty(jmax + 1)
    log_d = np.empty(jmax + 1)
    log_c[0] = math.log(C_B1 / math.sqrt(2.0))
    log_d[0] = math.log(_d0(seed))
    # running sums of ln x_i / (i + 1) over i < j
    sum_c = log_c[0]
    sum_d = log_d[0]
    for j in range(1, jmax + 1):
        exponent = (j + 1) / (2.0 * (j + 2) * j)
        if reading is Reading.HALVED:
            exponent *= 0.5
        head = _log1p_exp(2.0 * (j + 1) * log_d[j - 1])
        log_c[j] = exponent * (head + 2.0 * sum_c)
        log_d[j] = exponent * (head + 2.0 * sum_d)
        sum_c += log_c[j] / (j + 1)
        sum_d += log_d[j] / (j + 1)
    log_cm = np.zeros(jmax + 3)
    log_cm[2:] = np.cumsum(log_c / np.arange(1, jmax + 2))
    return log_c, log_d, log_cm


def _table_size(m: int) -> int:
    size = 16
    while size < m:
        size *= 2
    return size


def log_hat_sequences(jmax: int, reading=Reading.PRINTED, d0_seed=D0Seed.C_B1) -> Tuple[np.ndarray, np.ndarray]:
    if jmax < 0:
        raise InvalidArgument(f"jmax must be >= 0, got {jmax}")
    log_c, log_d, _ = _log_tables(_table_size(jmax), Reading(reading), D0Seed(d0_seed))
    return log_c[: jmax + 1].copy(), log_d[: jmax + 1].copy()


def hat_sequences(jmax: int, reading=Reading.PRINTED, d0_seed=D0Seed.C_B1) -> Tuple[np.ndarray, np.ndarray]:
    """The recursive constants hat_c_j and hat_d_j for j = 0..jmax."""
    log_c, log_d = log_hat_sequences(jmax, reading, d0_seed)
    peak = max(log_c.max(), log_d.max())
    if peak > _LOG_MAX:
        raise NumericFailure(f"hat constants overflow a double for jmax={jmax} (ln value {peak:.1f})")
    return np.exp(log_c), np.exp(log_d)


def log_c_m(m: int, reading=Reading.PRINTED, d0_seed=D0Seed.C_B1) -> float:
    """ln c_m, with c_1 = 1."""
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    if m == 1:
        return 0.0
    _, _, log_cm = _log_tables(_table_size(m), Reading(reading), D0Seed(d0_seed))
    return float(log_cm[m])


def c_m(m: int, reading=Reading.PRINTED, d0_seed=D0Seed.C_B1) -> float:
    """c_m = prod_{j=0}^{m-2} hat_c_j^(1/(j+1))."""
    value = log_c_m(m, reading, d0_seed)
    if value > _LOG_MAX:
        raise NumericFailure(f"c_{m} overflows a double (log10 c_m = {value / math.log(10):.1f})")
    return math.exp(value)


@dataclass(frozen=True)
class ConstantsTable:
    """The constant chain up to c_mmax under one reading of the recursion."""

    mmax: int
    reading: Reading = Reading.PRINTED
    d0_seed: D0Seed = D0Seed.C_B1
    c_A: float = C_A
    c_A1: float = C_A1
    c_B1: float = C_B1

    def __post_init__(self):
        if self.mmax < 1:
            raise InvalidArgument(f"mmax must be >= 1, got {self.mmax}")

    def c_m(self, m: int) -> float:
        return c_m(m, self.reading, self.d0_seed)

    def log10_c_m(self, m: int) -> float:
        return log_c_m(m, self.reading, self.d0_seed) / math.log(10.0)

    def rows(self) -> List[dict]:
        log_c, log_d = log_hat_sequences(max(self.mmax - 2, 0), self.reading, self.d0_seed)
        out = []
        for m in range(1, self.mmax + 1):
            log10_cm = self.log10_c_m(m)
            row = {
                "m": m,
                "log10_c_m": log10_cm,
                "c_m": 10.0 ** log10_cm if log10_cm * math.log(10.0) <= _LOG_MAX else None,
            }
            if m >= 2:
                j = m - 2
                row["j"] = j
                row["log10_hat_c"] = log_c[j] / math.log(10.0)
                row["log10_hat_d"] = log_d[j] / math.log(10.0)
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {
            "c_A": self.c_A,
            "c_A1": self.c_A1,
            "c_B1": self.c_B1,
            "exp_factor": EXP_FACTOR,
            "reading": self.reading.value,
            "d0_seed": self.d0_seed.value,
            "mmax": self.mmax,
            "rows": self.rows(),
        }


def constants_comparison() -> List[dict]:
    """Every (reading, d0 seed) pair against the published c_m values."""
    out = []
    for reading in Reading:
        for seed in D0Seed:
            values = []
            for m, reference in REFERENCE_C_M.items():
                log10_cm = log_c_m(m, reading, seed) / math.log(10.0)
                deviation = 10.0 ** (log10_cm - math.log10(reference)) - 1.0 if log10_cm < 300 else None
                values.append({
                    "m": m,
                    "reference": reference,
                    "log10_c_m": log10_cm,
                    "relative_deviation": deviation,
                })
            reproduces = all(
                v["relative_deviation"] is not None and abs(v["relative_deviation"]) <= REPRODUCE_TOL
                for v in values
            )
            out.append({
                "reading": reading.value,
                "d0_seed": seed.value,
                "reproduces_tables": reproduces,
                "values": values,
            })
    return out


# Ranges of the order argument for each lemma, as functions of M.
_ORDER_RANGES = {
    Lemma.PARTS: lambda M: (1, M - 1),
    Lemma.INTERP_UNO_M: lambda M: (2, M),
    Lemma.MAX_EST: lambda M: (1, M),
    Lemma.AGMON: lambda M: (1, 1),
    Lemma.AGMON_DK: lambda M: (1, M - 1),
    Lemma.PARTS_G: lambda M: (1, M - 1),
    Lemma.INTERP_UNO_MG: lambda M: (2, M),
    Lemma.MAX_EST_G: lambda M: (1, M - 1),
}


def admissible_orders(lemma, M: int, max_order: int = 6) -> List[int]:
    lo, hi = _ORDER_RANGES[Lemma(lemma)](M)
    return list(range(lo, min(hi, max_order) + 1))


def _check_order(lemma: Lemma, M: int, order: int):
    lo, hi = _ORDER_RANGES[lemma](M)
    if not lo <= order <= hi:
        raise InvalidArgument(f"{lemma.value} needs order in {lo}..{hi} for M={M}, got {order}")


def _power(x: float, p: float) -> float:
    return x ** p if x > 0 else 0.0


@dataclass
class FuzzSummary:
    lemma: str
    trials: int
    checks: int
    violations: int
    seed: int
    worst: Optional[InequalityReport] = None
    violating: List[InequalityReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "trials": self.trials,
            "checks": self.checks,
            "violations": self.violations,
            "seed": self.seed,
            "worst": self.worst.to_dict() if self.worst else None,
            "violating": [r.to_dict() for r in self.violating],
        }


def random_trajectory(
    rng: np.random.Generator,
    grid: TimeGrid,
    dim: int,
    periodic: bool = False,
    smooth_passes: int = 0,
    zero_mean: bool = False,
    scale: float = 1.0,
) -> Trajectory:
    """Standard normal snapshots, optionally smoothed by repeated adjacent averaging."""
    values = rng.standard_normal((grid.M + 1, dim))
    for _ in range(smooth_passes):
        if periodic:
            cycle = values[:-1]
            values[:-1] = 0.25 * (np.roll(cycle, 1, axis=0) + 2.0 * cycle + np.roll(cycle, -1, axis=0))
        elif grid.M >= 2:
            values[1:-1] = 0.25 * (values[:-2] + 2.0 * values[1:-1] + values[2:])
    if periodic:
        values[-1] = values[0]
    if zero_mean:
        values -= values[:-1].mean(axis=0) if periodic else values.mean(axis=0)
    return Trajectory(grid, scale * values, periodic=periodic)


class InequalityLab:
    """Evaluates the sequence lemmas and function-value theorems against one constants table."""

    def __init__(self, constants: Optional[ConstantsTable] = None):
        self.constants = constants or ConstantsTable(mmax=16)

    def check_periodic(self, f: Trajectory, lemma, order: int) -> InequalityReport:
        lemma = Lemma(lemma)
        if lemma not in PERIODIC_LEMMAS:
            raise InvalidArgument(f"{lemma.value} is not a periodic-sequence lemma")
        if not f.periodic:
            raise InvalidArgument("periodic lemmas need a periodic trajectory")
        _check_order(lemma, f.grid.M, order)
        params = {"order": order, "M": f.grid.M}

        if lemma is Lemma.PARTS:
            lhs = dq_norm0(f, order)
            rhs = math.sqrt(dq_norm0(f, order - 1) * dq_norm0(f, order + 1))
        elif lemma is Lemma.INTERP_UNO_M:
            lhs = dq_norm0(f, 1)
            rhs = _power(dq_norm0(f, 0), (order - 1) / order) * _power(dq_norm0(f, order), 1.0 / order)
        else:
            mean = f.values[1:].mean(axis=0)
            g = f.with_values(f.values - mean)
            params["mean_norm"] = f.space.norm(mean)
            lhs = float(g.space.norms(g.values[1:]).max())
            rhs = C_A * _power(dq_norm0(g, 0), 1.0 - 1.0 / (2 * order)) * _power(
                dq_norm0(g, order), 1.0 / (2 * order)
            )
        return InequalityReport.evaluate(lemma.value, lhs, rhs, params)

    def check_general(
        self, f: Trajectory, lemma, order: int = 1, norm=SeqNormKind.UNIFORM
    ) -> InequalityReport:
        """Check one general-sequence lemma on f minus its mean over n = 0..M."""
        lemma = Lemma(lemma)
        if lemma not in GENERAL_LEMMAS:
            raise InvalidArgument(f"{lemma.value} is not a general-sequence lemma")
        _check_order(lemma, f.grid.M, order)
        if f.periodic:
            f = f.with_values(f.values, periodic=False)
        mean = f.values.mean(axis=0)
        g = f.with_values(f.values - mean)
        tau = g.grid.tau
        params = {"order": order, "M": g.grid.M, "mean_norm": f.space.norm(mean)}

        if lemma is Lemma.AGMON:
            norm = SeqNormKind(norm)
            params.pop("order")
            params["norm"] = norm.value
            lhs = float(g.space.norms(g.values).max())
            f0 = seq_norm0(g.values, tau, norm, g.space)
            rhs = C_A * math.sqrt(f0 * dq_norm0(g, 1))
        elif lemma is Lemma.AGMON_DK:
            k = order
            norms = g.space.norms(dq(g, k))
            lhs = float(norms.max())
            params["lhs_at_M"] = float(norms[-1])
            params["lhs_interior"] = float(norms[:-1].max()) if norms.size > 1 else 0.0
            rhs = C_A1 * math.sqrt(dq_norm0(g, k) * weighted_dq_norm(g, k, 1))
        elif lemma is Lemma.PARTS_G:
            k = order
            constant = C_B1 / math.sqrt(2.0) if k == 1 else C_B1
            lhs = dq_norm0(g, k)
            rhs = constant * math.sqrt(dq_norm0(g, k - 1) * weighted_dq_norm(g, k, 1))
        elif lemma is Lemma.INTERP_UNO_MG:
            m = order
            params["c_m"] = self.constants.c_m(m)
            lhs = dq_norm0(g, 1)
            rhs = params["c_m"] * _power(dq_norm0(g, 0), (m - 1) / m) * _power(
                weighted_dq_norm(g, 1, m - 1), 1.0 / m
            )
        else:
            m = order
            params["c_m"] = self.constants.c_m(m)
            lhs = float(g.space.norms(g.values).max())
            rhs = C_A * math.sqrt(params["c_m"]) * _power(dq_norm0(g, 0), 1.0 - 1.0 / (2 * m)) * _power(
                weighted_dq_norm(g, 1, m - 1), 1.0 / (2 * m)
            )
        return InequalityReport.evaluate(lemma.value, lhs, rhs, params)

    def check(self, f: Trajectory, lemma, order: int) -> InequalityReport:
        lemma = Lemma(lemma)
        if lemma in PERIODIC_LEMMAS:
            return self.check_periodic(f, lemma, order)
        return self.check_general(f, lemma, order)

    def check_function_theorem(
        self,
        sampler: Sampler,
        grid: TimeGrid,
        space: Optional[HilbertSpace],
        variant,
        m: int,
        quad_points: int = QUAD_POINTS,
    ) -> Tuple[InequalityReport, InequalityReport]:
        """The difference-quotient bound and the pointwise bound for f_n = f(t_n)."""
        variant = TheoremVariant(variant)
        periodic = variant is TheoremVariant.PERIODIC
        hi = grid.M - 1 if periodic else grid.M
        if not 1 <= m <= hi:
            raise InvalidArgument(f"{variant.value} needs 1 <= m <= {hi}, got {m}")
        f = sample_trajectory(sampler, grid, space, periodic)
        T = grid.T
        f0 = dq_norm0(f, 0)
        params = {"m": m, "M": grid.M}

        if periodic:
            q = time_l2_norm(sampler, T, m, quad_points, space)
            params["derivative_norm"] = q
            dq_rhs = 2.0 ** ((m - 1) / m) * m ** (1.0 / m) * _power(f0, (m - 1) / m) * _power(q, 1.0 / m)
            max_core = 2.0 ** ((m - 1) / (2 * m)) * m ** (1.0 / (2 * m)) * C_A
            max_core *= _power(f0, 1.0 - 1.0 / (2 * m)) * _power(q, 1.0 / (2 * m))
            rows = f.values[1:]
        else:
            cm = self.constants.c_m(m)
            h = time_sobolev_norm(shift_sampler(sampler, 1), T, m - 1, quad_points, space)
            params.update({"c_m": cm, "derivative_norm": h})
            dq_rhs = 2.0 ** ((m - 1) / m) * cm * _power(f0, (m - 1) / m) * _power(h, 1.0 / m)
            max_core = 2.0 ** ((m - 1) / (2 * m)) * C_A * math.sqrt(cm)
            max_core *= _power(f0, 1.0 - 1.0 / (2 * m)) * _power(h, 1.0 / (2 * m))
            rows = f.values

        norms = f.space.norms(rows)
        mean_norm = f.space.norm(rows.mean(axis=0))
        zero_mean = mean_norm <= 1e-12 * float(norms.max()) if norms.size else True
        tail = 0.0 if zero_mean else f0 / math.sqrt(T)
        params["mean_term"] = tail
        dq_report = InequalityReport.evaluate(
            f"{variant.value}_dq", dq_norm0(f, 1), dq_rhs, dict(params), QUADRATURE_REL, QUADRATURE_ABS
        )
        max_report = InequalityReport.evaluate(
            f"{variant.value}_max", float(norms.max()), max_core + tail, dict(params), QUADRATURE_REL, QUADRATURE_ABS
        )
        return dq_report, max_report

    def _ratio(self, values: np.ndarray, grid: TimeGrid, periodic: bool, lemma: Lemma, order: int) -> InequalityReport:
        if periodic:
            values = values.copy()
            values[-1] = values[0]
        return self.check(Trajectory(grid, values, periodic=periodic), lemma, order)

    def _starts(self, rng, lemma: Lemma, grid: TimeGrid, dim: int, periodic: bool, trials: int):
        M = grid.M
        if M % 2 == 0 or not periodic:
            alternating = np.outer((-1.0) ** np.arange(M + 1), np.eye(dim)[0])
            yield alternating
        for _ in range(trials):
            yield random_trajectory(rng, grid, dim, periodic, smooth_passes=int(rng.integers(0, 3))).values

    def sharpness_search(
        self,
        lemma,
        order: int,
        trials: int,
        seed: int = 0,
        dims: Tuple[int, int] = (8, 2),
        refine_rounds: int = 6,
    ) -> InequalityReport:
        """Largest lhs/rhs ratio found from random and structured starts plus coordinate refinement."""
        lemma = Lemma(lemma)
        if trials < 1:
            raise InvalidArgument(f"trials must be >= 1, got {trials}")
        M, dim = dims
        grid = TimeGrid(1.0, M)
        periodic = lemma in PERIODIC_LEMMAS
        _check_order(lemma, M, order)
        rng = np.random.default_rng(seed)

        best_values, best = None, None
        for values in self._starts(rng, lemma, grid, dim, periodic, trials):
            report = self._ratio(values, grid, periodic, lemma, order)
            if best is None or report.ratio > best.ratio:
                best_values, best = values.copy(), report

        free_rows = M if periodic else M + 1
        step = 0.5 * float(np.abs(best_values).max() or 1.0)
        for _ in range(refine_rounds):
            improved = False
            for n in range(free_rows):
                for i in range(dim):
                    for sign in (1.0, -1.0):
                        trial = best_values.copy()
                        trial[n, i] += sign * step
                        report = self._ratio(trial, grid, periodic, lemma, order)
                        if report.ratio > best.ratio:
                            best_values, best, improved = trial, report, True
            if not improved:
                step *= 0.5
        best.params.update({"seed": seed, "trials": trials, "search": "sharpness"})
        logger.debug("Sharpness %s order %d: ratio %.6f", lemma.value, order, best.ratio)
        return best

    def fuzz_lemma(
        self,
        lemma,
        trials: int,
        seed: int = 0,
        orders: Optional[Sequence[int]] = None,
        max_M: int = 64,
        max_dim: int = 8,
        max_order: int = 6,
    ) -> FuzzSummary:
        """Check a lemma on seeded random trajectories at every admissible order."""
        lemma = Lemma(lemma)
        if trials < 1:
            raise InvalidArgument(f"trials must be >= 1, got {trials}")
        periodic = lemma in PERIODIC_LEMMAS
        rng = np.random.default_rng(seed)
        summary = FuzzSummary(lemma.value, trials, 0, 0, seed)
        for _ in range(trials):
            M = int(rng.integers(2, max_M + 1))
            grid = TimeGrid(float(10.0 ** rng.uniform(-2, 2)), M)
            f = random_trajectory(
                rng,
                grid,
                int(rng.integers(1, max_dim + 1)),
                periodic,
                smooth_passes=int(rng.integers(0, 4)),
                zero_mean=bool(rng.integers(0, 2)),
                scale=float(10.0 ** rng.uniform(-3, 3)),
            )
            for order in orders or admissible_orders(lemma, M, max_order):
                if order not in admissible_orders(lemma, M, M):
                    continue
                report = self.check(f, lemma, order)
                summary.checks += 1
                if summary.worst is None or report.ratio > summary.worst.ratio:
                    summary.worst = report
                if not report.passed:
                    summary.violations += 1
                    summary.violating.append(report)
        if summary.violations:
            logger.warning("%s: %d violations in %d checks", lemma.value, summary.violations, summary.checks)
        return summary


_default_lab = InequalityLab()


def check_periodic(f: Trajectory, lemma, order: int) -> InequalityReport:
    return _default_lab.check_periodic(f, lemma, order)


def check_general(f: Trajectory, lemma, order: int = 1, norm=SeqNormKind.UNIFORM) -> InequalityReport:
    return _default_lab.check_general(f, lemma, order, norm)


def check_function_theorem(sampler, grid, space, variant, m, quad_points=QUAD_POINTS):
    return _default_lab.check_function_theorem(sampler, grid, space, variant, m, quad_points)


def sharpness_search(lemma, order, trials, seed=0, dims=(8, 2)) -> InequalityReport:
    return _default_lab.sharpness_search(lemma, order, trials, seed, dims)


def fuzz_lemma(lemma, trials, seed=0, orders=None, max_M=64, max_dim=8, max_order=6) -> FuzzSummary:
    return _default_lab.fuzz_lemma(lemma, trials, seed, orders, max_M, max_dim, max_order)


def check_tail_mean(f: Trajectory, k: int) -> InequalityReport:
    """||m_k|| <= ||D^k f_tau||_0 / sqrt(count * tau), the Hoelder bound on the tail mean."""
    rows = dq(f, k)
    count = rows.shape[0]
    lhs = f.space.norm(rows.mean(axis=0))
    rhs = dq_norm0(f, k) / math.sqrt(count * f.grid.tau)
    return InequalityReport.evaluate("tail_mean", lhs, rhs, {"k": k, "horizon": count * f.grid.tau})


def check_dq_sobolev(
    sampler: Sampler,
    grid: TimeGrid,
    space: Optional[HilbertSpace],
    k: int,
    periodic: bool = False,
    quad_points: int = QUAD_POINTS,
) -> InequalityReport:
    """||D^k f_tau||_0 <= k ||d^k f||_{L^2(0,T,X)} for sampled f."""
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    f = sample_trajectory(sampler, grid, space, periodic)
    lhs = dq_norm0(f, k)
    rhs = k * time_l2_norm(sampler, grid.T, k, quad_points, space)
    return InequalityReport.evaluate("dq_sobolev", lhs, rhs, {"k": k, "M": grid.M}, QUADRATURE_REL, QUADRATURE_ABS)


def check_dq_weighted_sobolev(
    sampler: Sampler,
    grid: TimeGrid,
    space: Optional[HilbertSpace],
    m: int,
    quad_points: int = QUAD_POINTS,
) -> InequalityReport:
    """||D^1 f_tau||_{m-1}^(1/m) <= 4 ||d_t f||_{H^{m-1}(0,T,X)}^(1/m)."""
    if not 2 <= m <= grid.M:
        raise InvalidArgument(f"m must be in 2..{grid.M}, got {m}")
    f = sample_trajectory(sampler, grid, space)
    lhs = _power(weighted_dq_norm(f, 1, m - 1), 1.0 / m)
    h = time_sobolev_norm(shift_sampler(sampler, 1), grid.T, m - 1, quad_points, space)
    rhs = 4.0 * _power(h, 1.0 / m)
    params = {"m": m, "M": grid.M, "exp_factor": EXP_FACTOR}
    return InequalityReport.evaluate("dq_weighted_sobolev", lhs, rhs, params, QUADRATURE_REL, QUADRATURE_ABS)
