"""Uniform time grids, difference quotients and the discrete norms built on them."""

import logging
import math
from typing import Callable, Optional

import numpy as np

from podkit.models import HilbertSpace, InvalidArgument, SeqNormKind, TimeGrid, Trajectory

logger = logging.getLogger(__name__)

# sampler(times, order) -> array of shape (order + 1, len(times), N) holding
# the time derivatives 0..order; a (order + 1, len(times)) result is read as N = 1.
Sampler = Callable[[np.ndarray, int], np.ndarray]

QUAD_POINTS = 2049
_QUAD_CHUNK = 512


def make_grid(T: float, M: int) -> TimeGrid:
    """Uniform partition of [0, T] into M intervals."""
    return TimeGrid(T=float(T), M=M)


def horizon(grid: TimeGrid, k: int) -> float:
    """T_k: T for k = 0, otherwise the length (M + 1 - k) tau of the k-th tail."""
    if k == 0:
        return grid.T
    return (grid.M + 1 - k) * grid.tau


def _as_rows(seq) -> np.ndarray:
    rows = np.asarray(seq, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1)
    if rows.ndim != 2:
        raise InvalidArgument(f"expected a sequence of vectors, got array of shape {rows.shape}")
    return rows


def _squared_norms(rows: np.ndarray, space: Optional[HilbertSpace]) -> np.ndarray:
    if space is None:
        return np.einsum("ij,ij->i", rows, rows)
    return space.squared_norms(rows)


def difference_quotients(values, tau: float, k: int, periodic: bool = False) -> np.ndarray:
    """Backward difference quotients D^k of a sequence f_0..f_M.

    Returns D^k f_n for n = k..M, or for n = 1..M when the sequence is
    periodic with period M (indices wrap modulo M).
    """
    if k < 0:
        raise InvalidArgument(f"difference order must be >= 0, got {k}")
    seq = _as_rows(values)
    if periodic:
        seq = seq[1:]
        for _ in range(k):
            seq = (seq - np.roll(seq, 1, axis=0)) / tau
        return seq
    if k > seq.shape[0] - 1:
        raise InvalidArgument(f"order {k} exceeds M = {seq.shape[0] - 1} on a non-periodic sequence")
    for _ in range(k):
        seq = np.diff(seq, axis=0) / tau
    return seq


def dq(f: Trajectory, k: int) -> np.ndarray:
    return difference_quotients(f.values, f.grid.tau, k, f.periodic)


def seq_norm0(seq, tau: float, kind=SeqNormKind.UNIFORM, space: Optional[HilbertSpace] = None) -> float:
    """Weighted root-sum-square (tau * sum ||f_n||^2)^(1/2) of a sequence.

    The trapezoid kind halves the two endpoint weights.
    """
    kind = SeqNormKind(kind)
    rows = _as_rows(seq)
    if rows.shape[0] == 0:
        raise InvalidArgument("cannot take the norm of an empty sequence")
    if not tau > 0:
        raise InvalidArgument(f"step must be positive, got {tau}")
    weights = np.full(rows.shape[0], float(tau))
    if kind is SeqNormKind.TRAPEZOID:
        if rows.shape[0] < 2:
            raise InvalidArgument("trapezoid norm needs at least two nodes")
        weights[0] *= 0.5
        weights[-1] *= 0.5
    return math.sqrt(float(weights @ _squared_norms(rows, space)))


def dq_norm0(f: Trajectory, k: int) -> float:
    """||D^k f_tau||_0, summed over n = k..M (n = 1..M when periodic)."""
    return seq_norm0(dq(f, k), f.grid.tau, SeqNormKind.UNIFORM, f.space)


def weighted_dq_norm(f: Trajectory, k: int, m: int) -> float:
    """||D^k f_tau||_m = (sum_{j=k}^{k+m} T_j^{-2(m+k-j)} ||D^j f_tau||_0^2)^(1/2)."""
    if k < 0 or m < 0:
        raise InvalidArgument(f"orders must be >= 0, got k={k}, m={m}")
    if k + m > f.grid.M:
        raise InvalidArgument(f"k + m = {k + m} exceeds M = {f.grid.M}")
    total = 0.0
    for j in range(k, k + m + 1):
        total += horizon(f.grid, j) ** (-2 * (m + k - j)) * dq_norm0(f, j) ** 2
    return math.sqrt(total)


def tail_mean(f: Trajectory, k: int) -> np.ndarray:
    """m_k: arithmetic mean of D^k f_n over n = k..M."""
    return dq(f, k).mean(axis=0)


def sample_derivatives(sampler: Sampler, times: np.ndarray, order: int) -> np.ndarray:
    out = np.asarray(sampler(times, order), dtype=float)
    if out.ndim == 2:
        out = out[:, :, None]
    if out.ndim != 3 or out.shape[:2] != (order + 1, len(times)):
        raise InvalidArgument(
            f"sampler returned shape {out.shape}, expected ({order + 1}, {len(times)}, N)"
        )
    return out


def squared_derivative_integrals(
    sampler: Sampler,
    T: float,
    m: int,
    quad_points: int = QUAD_POINTS,
    space: Optional[HilbertSpace] = None,
) -> np.ndarray:
    """Composite-trapezoid values of int_0^T ||d^k u/dt^k||^2 dt for k = 0..m."""
    if quad_points < 2:
        raise InvalidArgument(f"need at least 2 quadrature points, got {quad_points}")
    if not T > 0:
        raise InvalidArgument(f"duration must be positive, got {T}")
    if m < 0:
        raise InvalidArgument(f"derivative order must be >= 0, got {m}")
    times = np.linspace(0.0, T, quad_points)
    weights = np.full(quad_points, T / (quad_points - 1))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    totals = np.zeros(m + 1)
    for start in range(0, quad_points, _QUAD_CHUNK):
        chunk = slice(start, start + _QUAD_CHUNK)
        values = sample_derivatives(sampler, times[chunk], m)
        for k in range(m + 1):
            totals[k] += _squared_norms(values[k], space) @ weights[chunk]
    return totals


def time_sobolev_norm(
    sampler: Sampler,
    T: float,
    m: int,
    quad_points: int = QUAD_POINTS,
    space: Optional[HilbertSpace] = None,
) -> float:
    """||u||_{H^m(0,T,X)} = (sum_{k=0}^m T^{-2(m-k)} int ||d^k u||^2)^(1/2)."""
    integrals = squared_derivative_integrals(sampler, T, m, quad_points, space)
    weights = float(T) ** (-2.0 * (m - np.arange(m + 1)))
    return math.sqrt(float(weights @ integrals))


def time_l2_norm(
    sampler: Sampler,
    T: float,
    order: int,
    quad_points: int = QUAD_POINTS,
    space: Optional[HilbertSpace] = None,
) -> float:
    """||d^order u / dt^order||_{L^2(0,T,X)}."""
    integrals = squared_derivative_integrals(sampler, T, order, quad_points, space)
    return math.sqrt(float(integrals[order]))


def shift_sampler(sampler: Sampler, shift: int = 1) -> Sampler:
    """Sampler of d^shift u / dt^shift built from a sampler of u."""

    def shifted(times: np.ndarray, order: int) -> np.ndarray:
        return sample_derivatives(sampler, times, order + shift)[shift:]

    return shifted


def derivative_norm_series(
    sampler: Sampler, times, order: int, space: Optional[HilbertSpace] = None
) -> np.ndarray:
    """||d^order u(t) / dt^order|| at each of `times`."""
    times = np.asarray(times, dtype=float)
    values = sample_derivatives(sampler, times, order)[order]
    return np.sqrt(_squared_norms(values, space))


def sample_trajectory(
    sampler: Sampler, grid: TimeGrid, space: Optional[HilbertSpace] = None, periodic: bool = False
) -> Trajectory:
    """Snapshots f_n = f(t_n) of a sampled function.

    For a periodic function the last snapshot is set to the first one so
    rounding in f(T) does not break periodicity.
    """
    values = sample_derivatives(sampler, grid.nodes, 0)[0]
    if periodic:
        values = values.copy()
        values[-1] = values[0]
    return Trajectory(grid, values, space, periodic)
