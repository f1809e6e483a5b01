"""POD bases by the method of snapshots, projections and the energy identities."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from podkit.models import (
    CorrelationMatrix,
    HilbertSpace,
    InequalityReport,
    InvalidArgument,
    NumericFailure,
    PodBasis,
    Trajectory,
)

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12


@dataclass(eq=False)
class ProjectionErrors:
    """Per-snapshot projection errors e_n and their summaries."""

    errors: np.ndarray
    maximum: float
    mean_square: float

    @property
    def quadratic_mean(self) -> float:
        return math.sqrt(self.mean_square)


def _check_dim(space: HilbertSpace, n: int):
    if space.dim != n:
        raise InvalidArgument(f"dimension mismatch: space has {space.dim}, vectors have {n}")


def retained_snapshots(traj: Trajectory, drop_first: bool = False, mean: Optional[np.ndarray] = None) -> np.ndarray:
    """Snapshots entering the correlation matrix, optionally without u^0 and centered."""
    rows = traj.values[1:] if drop_first else traj.values
    if mean is not None:
        rows = rows - mean
    return rows


def correlation_from_snapshots(rows: np.ndarray, space: HilbertSpace, weight: float) -> np.ndarray:
    entries = weight * (rows @ space.apply(rows).T)
    return 0.5 * (entries + entries.T)


def build_correlation(
    traj: Trajectory,
    space: Optional[HilbertSpace] = None,
    drop_first: bool = False,
    subtract_mean: bool = False,
) -> CorrelationMatrix:
    """Weighted Gram matrix of the retained snapshots.

    The weight is 1/(M+1), or 1/M when the first snapshot is dropped (the
    periodic case, where u^0 = u^M).
    """
    space = space or traj.space
    _check_dim(space, traj.dim)
    if drop_first and traj.values.shape[0] < 2:
        raise InvalidArgument("dropping the first snapshot needs at least two snapshots")
    rows = retained_snapshots(traj, drop_first)
    mean = None
    if subtract_mean:
        mean = rows.mean(axis=0)
        rows = rows - mean
    weight = 1.0 / rows.shape[0]
    return CorrelationMatrix(correlation_from_snapshots(rows, space, weight), weight, drop_first, mean)


def _gram_factor(space: HilbertSpace) -> np.ndarray:
    """Lower Cholesky factor L of the Gram matrix, G = L L^T."""
    gram = space.gram.toarray() if sp.issparse(space.gram) else np.asarray(space.gram, dtype=float)
    try:
        return la.cholesky(gram, lower=True)
    except la.LinAlgError as e:
        raise NumericFailure(f"Gram matrix is not positive definite: {e}") from e


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    for row in modes:
        scale = np.abs(row).max()
        if scale == 0:
            continue
        lead = np.flatnonzero(np.abs(row) > 1e-12 * scale)[0]
        if row[lead] < 0:
            row *= -1.0
    return modes


def compute_pod(
    corr: CorrelationMatrix,
    traj: Trajectory,
    space: Optional[HilbertSpace] = None,
    rank_tol: float = RANK_TOL,
) -> PodBasis:
    """Singular values and X-orthonormal modes of the snapshots behind `corr`.

    With G = L L^T the correlation matrix is B B^T for B = w^(1/2) U L, U the
    retained snapshot rows. The SVD B = Y diag(sigma) V^T gives sigma_k = lambda_k^(1/2)
    without squaring the data, and phi^k = L^(-T) v_k. J counts the
    lambda_k above rank_tol * lambda_1; the smaller nonzero singular values
    are kept as the remainder.
    """
    space = space or traj.space
    _check_dim(space, traj.dim)
    rows = retained_snapshots(traj, corr.drop_first, corr.mean)
    if corr.entries.shape != (rows.shape[0], rows.shape[0]):
        raise InvalidArgument(
            f"correlation matrix of shape {corr.entries.shape} does not match {rows.shape[0]} snapshots"
        )
    factor = _gram_factor(space)
    scaled = math.sqrt(corr.weight) * (rows @ factor)
    try:
        _, singular, vt = la.svd(scaled, full_matrices=False)
    except la.LinAlgError as e:
        raise NumericFailure(f"Snapshot SVD failed: {e}") from e

    top = float(singular[0]) if singular.size else 0.0
    if not top > 0:
        J, kept = 0, 0
    else:
        J = int(np.count_nonzero(singular ** 2 > rank_tol * top ** 2))
        # same cut-off as numpy.linalg.matrix_rank
        noise = np.finfo(float).eps * max(scaled.shape) * top
        kept = max(J, int(np.count_nonzero(singular > noise)))
    modes = np.zeros((0, traj.dim))
    if kept:
        modes = la.solve_triangular(factor, vt[:kept].T, lower=True, trans="T").T
        modes = _fix_signs(np.ascontiguousarray(modes))
    logger.debug(
        "POD rank %d of %d snapshots, %d remainder directions (sigma_1=%g)", J, rows.shape[0], kept - J, top
    )
    return PodBasis(
        space=space,
        sigma=singular[:J].copy(),
        modes=modes[:J].copy(),
        weight=corr.weight,
        source_count=rows.shape[0],
        drop_first=corr.drop_first,
        mean=corr.mean,
        remainder_sigma=singular[J:kept].copy(),
        remainder_modes=modes[J:kept].copy(),
    )


def pod_from_trajectory(
    traj: Trajectory,
    space: Optional[HilbertSpace] = None,
    drop_first: bool = False,
    subtract_mean: bool = False,
    rank_tol: float = RANK_TOL,
) -> PodBasis:
    corr = build_correlation(traj, space, drop_first, subtract_mean)
    return compute_pod(corr, traj, space, rank_tol)


def _check_rank(basis: PodBasis, r: int):
    if r < 0 or r > basis.J:
        raise InvalidArgument(f"retained modes r={r} outside 0..{basis.J}")


def coefficients(basis: PodBasis, r: int, v: np.ndarray) -> np.ndarray:
    """X inner products (v, phi^k) for k <= r, one row per vector of `v`."""
    _check_rank(basis, r)
    v = np.asarray(v, dtype=float)
    return basis.space.apply(v) @ basis.modes[:r].T


def project(basis: PodBasis, r: int, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection P_X^r onto span(phi^1..phi^r); rows are projected independently."""
    return coefficients(basis, r, v) @ basis.modes[:r]


def residual(basis: PodBasis, r: int, v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=float) - project(basis, r, v)


def projection_error_series(
    basis: PodBasis, r: int, traj: Trajectory, measure: Optional[HilbertSpace] = None
) -> ProjectionErrors:
    """e_n = ||u^n - P_X^r u^n|| for every snapshot, in the `measure` norm.

    The stored basis mean is removed from the snapshots first. The mean
    square is taken over the snapshots that built the basis.
    """
    measure = measure or basis.space
    _check_dim(measure, traj.dim)
    _check_dim(basis.space, traj.dim)
    rows = retained_snapshots(traj, False, basis.mean)
    errors = measure.norms(residual(basis, r, rows))
    used = errors[1:] if basis.drop_first else errors
    return ProjectionErrors(errors, float(errors.max()), float(np.mean(used ** 2)))


def sigma_tail(basis: PodBasis) -> np.ndarray:
    """(sum_{k>r} sigma_k^2)^(1/2) for r = 0..J, the remainder included."""
    squares = np.concatenate([basis.sigma, basis.remainder_sigma]) ** 2
    tails = np.concatenate([np.cumsum(squares[::-1])[::-1], [0.0]])
    return np.sqrt(tails[: basis.J + 1])


def degraded_bound(basis: PodBasis, r: int) -> float:
    """sqrt(S) times the tail: the pointwise bound that follows from the energy identity alone."""
    _check_rank(basis, r)
    return math.sqrt(basis.source_count) * float(sigma_tail(basis)[r])


def verify_energy_identity(basis: PodBasis, traj: Trajectory, r: int) -> InequalityReport:
    """w * sum_n ||u^n - P_X^r u^n||_X^2 == sum_{k>r} sigma_k^2."""
    _check_rank(basis, r)
    rows = retained_snapshots(traj, basis.drop_first, basis.mean)
    lhs = basis.weight * float(basis.space.squared_norms(residual(basis, r, rows)).sum())
    rhs = float(sigma_tail(basis)[r] ** 2)
    energy = basis.weight * float(basis.space.squared_norms(rows).sum())
    return InequalityReport.identity("energy_identity", lhs, rhs, {"r": r}, scale=energy)


def mode_norms(basis: PodBasis, other: HilbertSpace) -> np.ndarray:
    """||phi^k||_other for k = 1..J."""
    _check_dim(other, basis.dim)
    return other.norms(basis.modes)


def cross_norm_tail(basis: PodBasis, r: int, other: HilbertSpace) -> float:
    """sum_{k>r} sigma_k^2 ||phi^k||_other^2 over the retained modes and the remainder."""
    _check_rank(basis, r)
    _check_dim(other, basis.dim)
    retained = float(basis.sigma[r:] ** 2 @ other.squared_norms(basis.modes[r:]))
    rest = float(basis.remainder_sigma ** 2 @ other.squared_norms(basis.remainder_modes))
    return retained + rest


def verify_cross_norm_identity(
    basis: PodBasis, traj: Trajectory, r: int, other: HilbertSpace
) -> InequalityReport:
    """w * sum_n ||(I - P_X^r) u^n||_other^2 == cross_norm_tail."""
    _check_dim(other, traj.dim)
    rows = retained_snapshots(traj, basis.drop_first, basis.mean)
    lhs = basis.weight * float(other.squared_norms(residual(basis, r, rows)).sum())
    rhs = cross_norm_tail(basis, r, other)
    energy = basis.weight * float(other.squared_norms(rows).sum())
    return InequalityReport.identity("cross_norm_identity", lhs, rhs, {"r": r}, scale=energy)
