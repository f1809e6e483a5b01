"""Data models for the POD toolkit."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

# Slack used by every inequality check: the inequalities are exact in the reals.
PASS_REL = 1e-12
PASS_ABS = 1e-14


class InvalidArgument(ValueError):
    """Exception for violated preconditions."""
    pass


class NumericFailure(ArithmeticError):
    """Exception for eigensolver, linear-solve or overflow failures."""
    pass


class GramKind(Enum):
    IDENTITY = "identity"
    MASS = "mass"
    STIFFNESS = "stiffness"


class SeqNormKind(Enum):
    UNIFORM = "uniform"
    TRAPEZOID = "trapezoid"


class Lemma(Enum):
    # periodic sequences
    PARTS = "parts"
    INTERP_UNO_M = "interp_uno_m"
    MAX_EST = "max_est"
    # general sequences
    AGMON = "agmon"
    AGMON_DK = "agmon_dk"
    PARTS_G = "parts_g"
    INTERP_UNO_MG = "interp_uno_mg"
    MAX_EST_G = "max_est_g"


PERIODIC_LEMMAS = (Lemma.PARTS, Lemma.INTERP_UNO_M, Lemma.MAX_EST)
GENERAL_LEMMAS = (Lemma.AGMON, Lemma.AGMON_DK, Lemma.PARTS_G, Lemma.INTERP_UNO_MG, Lemma.MAX_EST_G)


class TheoremVariant(Enum):
    PERIODIC = "periodic_cotas_f"
    GENERAL = "general_cotas_f_g"


class MeshKind(Enum):
    INTERVAL = "interval"
    SQUARE = "square"


class Boundary(Enum):
    ALL = "all"
    MIXED = "mixed"


class Scheme(Enum):
    EULER = "euler"
    BDF2 = "bdf2"


class Bdf2Start(Enum):
    PROJECT = "project"
    EULER_STEP = "euler_step"


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if isinstance(self.M, bool) or not isinstance(self.M, (int, np.integer)):
            raise InvalidArgument(f"interval count must be an integer, got {self.M!r}")
        if self.M < 1:
            raise InvalidArgument(f"interval count must be >= 1, got {self.M}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise InvalidArgument(f"duration must be positive, got {self.T}")

    @property
    def tau(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)


@dataclass(frozen=True, eq=False)
class HilbertSpace:
    """Finite-dimensional space with inner product u^T G v."""

    gram: object
    kind: GramKind = GramKind.IDENTITY

    def __post_init__(self):
        shape = self.gram.shape
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 1:
            raise InvalidArgument(f"Gram operator must be square and nonempty, got shape {shape}")
        asym = abs(self.gram - self.gram.T).max()
        if asym != 0:
            raise InvalidArgument(f"Gram operator is not symmetric (max asymmetry {asym:g})")

    @classmethod
    def identity(cls, n: int) -> "HilbertSpace":
        return cls(sp.identity(n, format="csr"), GramKind.IDENTITY)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Return G v for every row v of `rows`."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            return np.asarray(self.gram @ rows)
        return np.asarray(self.gram @ rows.T).T

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.asarray(u, dtype=float) @ self.apply(v))

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def squared_norms(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[0] == 0:
            return np.zeros(0)
        return np.maximum(np.einsum("ij,ij->i", rows, self.apply(rows)), 0.0)

    def norms(self, rows: np.ndarray) -> np.ndarray:
        return np.sqrt(self.squared_norms(rows))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """M+1 snapshots f_0..f_M on a time grid.

    One-dimensional `values` are read as scalar sequences (N = 1). When
    `space` is omitted the Euclidean inner product is used.
    """

    grid: TimeGrid
    values: np.ndarray
    space: Optional[HilbertSpace] = None
    periodic: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise InvalidArgument(f"snapshot array must be 2-D, got {values.ndim}-D")
        if values.shape[0] != self.grid.M + 1:
            raise InvalidArgument(
                f"expected {self.grid.M + 1} snapshots for M={self.grid.M}, got {values.shape[0]}"
            )
        object.__setattr__(self, "values", values)
        if self.space is None:
            object.__setattr__(self, "space", HilbertSpace.identity(values.shape[1]))
        elif self.space.dim != values.shape[1]:
            raise InvalidArgument(
                f"snapshot length {values.shape[1]} does not match space dimension {self.space.dim}"
            )
        if self.periodic:
            scale = float(self.space.norms(values).max())
            gap = self.space.norm(values[-1] - values[0])
            if gap > 1e-12 * scale:
                raise InvalidArgument(f"periodic trajectory has f_M != f_0 (gap {gap:g})")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, periodic: Optional[bool] = None) -> "Trajectory":
        return Trajectory(
            self.grid, values, self.space, self.periodic if periodic is None else periodic
        )

    def with_space(self, space: HilbertSpace) -> "Trajectory":
        return Trajectory(self.grid, self.values, space, self.periodic)

    def with_duration(self, T: float) -> "Trajectory":
        """Same snapshots on a rescaled time axis [0, T]."""
        return Trajectory(TimeGrid(T, self.grid.M), self.values, self.space, self.periodic)


@dataclass(eq=False)
class CorrelationMatrix:
    entries: np.ndarray
    weight: float
    drop_first: bool = False
    mean: Optional[np.ndarray] = None


@dataclass(eq=False)
class PodBasis:
    """Retained singular values and X-orthonormal modes.

    Directions below the rank tolerance are not part of the basis but their
    singular values and modes are kept as the remainder, so tails and
    identities account for every nonzero singular value.
    """

    space: HilbertSpace
    sigma: np.ndarray
    modes: np.ndarray
    weight: float
    source_count: int
    drop_first: bool = False
    mean: Optional[np.ndarray] = None
    remainder_sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    remainder_modes: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.remainder_modes is None:
            self.remainder_modes = np.zeros((0, self.space.dim))

    @property
    def J(self) -> int:
        return int(self.sigma.shape[0])

    @property
    def dim(self) -> int:
        return self.space.dim


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class InequalityReport:
    lemma_id: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    params: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def evaluate(
        cls,
        lemma_id: str,
        lhs: float,
        rhs: float,
        params: Optional[dict] = None,
        rel: float = PASS_REL,
        atol: float = PASS_ABS,
    ) -> "InequalityReport":
        """Build the report for the claim lhs <= rhs."""
        lhs, rhs = float(lhs), float(rhs)
        if rhs > 0:
            ratio = lhs / rhs
        else:
            ratio = math.inf if lhs > 0 else 0.0
        passed = bool(lhs <= rhs * (1.0 + rel) + atol)
        return cls(lemma_id, lhs, rhs, ratio, passed, dict(params or {}))

    @classmethod
    def identity(
        cls,
        lemma_id: str,
        lhs: float,
        rhs: float,
        params: Optional[dict] = None,
        rel: float = 1e-10,
        atol: float = 1e-14,
        scale: float = 1.0,
    ) -> "InequalityReport":
        """Build the report for the claim lhs == rhs.

        The absolute slack is atol * scale, with `scale` the magnitude of the
        data both sides are computed from.
        """
        lhs, rhs = float(lhs), float(rhs)
        gap = abs(lhs - rhs)
        floor = atol * float(scale)
        if rhs > 0:
            ratio = lhs / rhs
            passed = gap <= rel * rhs + floor
        else:
            ratio = math.inf if lhs > 0 else 0.0
            passed = gap <= floor
        params = dict(params or {})
        params["relative_gap"] = gap / rhs if rhs > 0 else None
        return cls(lemma_id, lhs, rhs, ratio, bool(passed), params)

    @property
    def overestimation(self) -> float:
        """Factor by which the right-hand side exceeds the left-hand side."""
        if self.lhs > 0:
            return self.rhs / self.lhs
        return math.inf if self.rhs > 0 else 1.0

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "lhs": _finite_or_none(self.lhs),
            "rhs": _finite_or_none(self.rhs),
            "ratio": _finite_or_none(self.ratio),
            "passed": self.passed,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "InequalityReport":
        """Create a report from its JSON form."""
        ratio = row.get("ratio")
        return cls(
            lemma_id=row["lemma_id"],
            lhs=row["lhs"] if row.get("lhs") is not None else math.inf,
            rhs=row["rhs"] if row.get("rhs") is not None else math.inf,
            ratio=ratio if ratio is not None else math.inf,
            passed=row["passed"],
            params=row.get("params", {}),
        )
