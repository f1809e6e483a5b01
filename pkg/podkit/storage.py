"""On-disk containers for snapshot trajectories, POD bases and problem descriptions."""

import hashlib
import json
import logging
import os
from typing import Optional

import numpy as np
import scipy.sparse as sp

from podkit.models import GramKind, HilbertSpace, PodBasis, TimeGrid, Trajectory
from podkit.pde_fem import ProblemConfig

logger = logging.getLogger(__name__)

SNAPSHOT_SCHEMA = "podkit-snapshots-v1"
BASIS_SCHEMA = "podkit-basis-v1"
PROBLEM_SCHEMA = "podkit-problem-v1"

_F64 = np.dtype("<f8")


class ContainerError(Exception):
    """Exception for malformed containers and reports, or failed I/O."""
    pass


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path: str) -> str:
    """sha256 of a file's exact bytes."""
    try:
        with open(path, "rb") as f:
            return digest_bytes(f.read())
    except OSError as e:
        raise ContainerError(f"Cannot read {path}: {e}") from e


def _payload(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=_F64).tobytes()


class Storage:
    """Directory-backed store for the pipeline containers.

    Layout under `out_dir`:
        snapshots/  meta.json, data.f64le, gram.f64le (optional)
        basis/      meta.json, sigma.f64le, modes.f64le, mean.f64le and
                    remainder_sigma.f64le / remainder_modes.f64le (optional)
        problem.json
    """

    def __init__(self, out_dir: Optional[str] = None):
        """Initialize the store.

        Args:
            out_dir: Output directory. Defaults to $PODKIT_OUT, then ./out.
        """
        if out_dir is None:
            out_dir = os.environ.get("PODKIT_OUT", "out")

        self.out_dir = out_dir
        self.snapshots_dir = os.path.join(out_dir, "snapshots")
        self.basis_dir = os.path.join(out_dir, "basis")
        self.problem_file = os.path.join(out_dir, "problem.json")

        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise ContainerError(f"Cannot create output directory {out_dir}: {e}") from e

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _load_json(self, path: str) -> dict:
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as e:
            raise ContainerError(f"Missing file: {path}") from e
        except (OSError, json.JSONDecodeError) as e:
            raise ContainerError(f"Cannot read {path}: {e}") from e

    def _save_json(self, path: str, data: dict):
        try:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)
                f.write("\n")
        except OSError as e:
            raise ContainerError(f"Cannot write {path}: {e}") from e

    def _load_f64(self, path: str, count: int) -> np.ndarray:
        try:
            with open(path, "rb") as f:
                data = f.read()
        except FileNotFoundError as e:
            raise ContainerError(f"Missing file: {path}") from e
        except OSError as e:
            raise ContainerError(f"Cannot read {path}: {e}") from e
        if len(data) != 8 * count:
            raise ContainerError(f"{path}: expected {8 * count} bytes, found {len(data)}")
        return np.frombuffer(data, dtype=_F64).astype(float)

    def _save_f64(self, path: str, array: np.ndarray) -> str:
        data = _payload(array)
        try:
            with open(path, "wb") as f:
                f.write(data)
        except OSError as e:
            raise ContainerError(f"Cannot write {path}: {e}") from e
        return digest_bytes(data)

    @staticmethod
    def _check_schema(meta: dict, schema: str, where: str):
        if meta.get("schema") != schema:
            raise ContainerError(f"{where}: expected schema {schema}, found {meta.get('schema')!r}")

    # snapshots

    def write_snapshots(self, traj: Trajectory, mean_subtracted: bool = False) -> str:
        """Write a trajectory; returns the digest of its payload.

        The Gram matrix is stored next to the data unless it is the identity.
        """
        os.makedirs(self.snapshots_dir, exist_ok=True)
        gram = {"kind": traj.space.kind.value}
        if traj.space.kind is not GramKind.IDENTITY:
            gram["file"] = "gram.f64le"
            dense = traj.space.gram.toarray() if sp.issparse(traj.space.gram) else traj.space.gram
            self._save_f64(os.path.join(self.snapshots_dir, "gram.f64le"), dense)
        digest = self._save_f64(os.path.join(self.snapshots_dir, "data.f64le"), traj.values)
        meta = {
            "schema": SNAPSHOT_SCHEMA,
            "N": traj.dim,
            "M": traj.grid.M,
            "T": traj.grid.T,
            "periodic": traj.periodic,
            "gram": gram,
            "mean_subtracted": mean_subtracted,
            "byte_order": "little",
            "layout": "time-major",
        }
        self._save_json(os.path.join(self.snapshots_dir, "meta.json"), meta)
        logger.info("Wrote %d snapshots of length %d to %s", traj.grid.M + 1, traj.dim, self.snapshots_dir)
        return digest

    def read_snapshots(self) -> Trajectory:
        meta = self._load_json(os.path.join(self.snapshots_dir, "meta.json"))
        self._check_schema(meta, SNAPSHOT_SCHEMA, self.snapshots_dir)
        if meta.get("byte_order") != "little" or meta.get("layout") != "time-major":
            raise ContainerError(f"{self.snapshots_dir}: unsupported byte order or layout")
        try:
            N, M, T = int(meta["N"]), int(meta["M"]), float(meta["T"])
            kind = GramKind(meta["gram"]["kind"])
        except (KeyError, TypeError, ValueError) as e:
            raise ContainerError(f"{self.snapshots_dir}: bad meta.json: {e}") from e
        values = self._load_f64(os.path.join(self.snapshots_dir, "data.f64le"), (M + 1) * N)
        if kind is GramKind.IDENTITY:
            space = HilbertSpace.identity(N)
        else:
            gram_file = meta["gram"].get("file")
            if not gram_file:
                raise ContainerError(f"{self.snapshots_dir}: {kind.value} Gram without a file")
            gram = self._load_f64(os.path.join(self.snapshots_dir, gram_file), N * N)
            space = HilbertSpace(sp.csr_matrix(gram.reshape(N, N)), kind)
        return Trajectory(TimeGrid(T, M), values.reshape(M + 1, N), space, bool(meta["periodic"]))

    def snapshot_digest(self) -> str:
        return digest_file(os.path.join(self.snapshots_dir, "data.f64le"))

    # basis

    def write_basis(self, basis: PodBasis) -> str:
        """Write a POD basis; returns the digest of the modes payload."""
        os.makedirs(self.basis_dir, exist_ok=True)
        self._save_f64(os.path.join(self.basis_dir, "sigma.f64le"), basis.sigma)
        digest = self._save_f64(os.path.join(self.basis_dir, "modes.f64le"), basis.modes)
        mean_path = os.path.join(self.basis_dir, "mean.f64le")
        if basis.mean is not None:
            self._save_f64(mean_path, basis.mean)
        elif os.path.exists(mean_path):
            os.remove(mean_path)
        R = basis.remainder_sigma.shape[0]
        for name, payload in (("remainder_sigma", basis.remainder_sigma), ("remainder_modes", basis.remainder_modes)):
            path = os.path.join(self.basis_dir, f"{name}.f64le")
            if R:
                self._save_f64(path, payload)
            elif os.path.exists(path):
                os.remove(path)
        meta = {
            "schema": BASIS_SCHEMA,
            "N": basis.dim,
            "J": basis.J,
            "space": basis.space.kind.value,
            "weight": basis.weight,
            "source_count": basis.source_count,
            "drop_first": basis.drop_first,
            "has_mean": basis.mean is not None,
            "remainder": R,
            "byte_order": "little",
            "layout": "mode-major",
        }
        self._save_json(os.path.join(self.basis_dir, "meta.json"), meta)
        logger.info("Wrote POD basis of rank %d to %s", basis.J, self.basis_dir)
        return digest

    def basis_kind(self) -> GramKind:
        """Gram kind the stored basis is orthonormal in."""
        meta = self._load_json(os.path.join(self.basis_dir, "meta.json"))
        self._check_schema(meta, BASIS_SCHEMA, self.basis_dir)
        try:
            return GramKind(meta["space"])
        except (KeyError, ValueError) as e:
            raise ContainerError(f"{self.basis_dir}: bad meta.json: {e}") from e

    def read_basis(self, space: HilbertSpace) -> PodBasis:
        """Read a basis and attach it to `space`, which must match the stored Gram kind."""
        meta = self._load_json(os.path.join(self.basis_dir, "meta.json"))
        self._check_schema(meta, BASIS_SCHEMA, self.basis_dir)
        try:
            N, J = int(meta["N"]), int(meta["J"])
            R = int(meta.get("remainder", 0))
            kind = GramKind(meta["space"])
        except (KeyError, TypeError, ValueError) as e:
            raise ContainerError(f"{self.basis_dir}: bad meta.json: {e}") from e
        if kind is not space.kind or N != space.dim:
            raise ContainerError(
                f"basis was built in a {kind.value} space of dimension {N}, "
                f"not {space.kind.value} of dimension {space.dim}"
            )
        sigma = self._load_f64(os.path.join(self.basis_dir, "sigma.f64le"), J)
        modes = self._load_f64(os.path.join(self.basis_dir, "modes.f64le"), J * N).reshape(J, N)
        mean = None
        if meta.get("has_mean"):
            mean = self._load_f64(os.path.join(self.basis_dir, "mean.f64le"), N)
        remainder_sigma, remainder_modes = np.zeros(0), np.zeros((0, N))
        if R:
            remainder_sigma = self._load_f64(os.path.join(self.basis_dir, "remainder_sigma.f64le"), R)
            remainder_modes = self._load_f64(os.path.join(self.basis_dir, "remainder_modes.f64le"), R * N).reshape(R, N)
        return PodBasis(
            space=space,
            sigma=sigma,
            modes=modes,
            weight=float(meta["weight"]),
            source_count=int(meta["source_count"]),
            drop_first=bool(meta["drop_first"]),
            mean=mean,
            remainder_sigma=remainder_sigma,
            remainder_modes=remainder_modes,
        )

    def basis_digest(self) -> str:
        return digest_file(os.path.join(self.basis_dir, "modes.f64le"))

    # problem description

    def write_problem(self, config: ProblemConfig):
        data = {"schema": PROBLEM_SCHEMA}
        data.update(config.to_dict())
        self._save_json(self.problem_file, data)

    def read_problem(self) -> ProblemConfig:
        data = self._load_json(self.problem_file)
        self._check_schema(data, PROBLEM_SCHEMA, self.problem_file)
        return ProblemConfig.from_dict(data)
