"""podkit command line: constants, lemma fuzzing and the snapshot -> POD -> ROM -> bounds pipeline."""

import argparse
import logging
import os
import sys
from typing import List, Optional

from podkit import __version__
from podkit.grids_sequences import derivative_norm_series
from podkit.inequality_lab import ConstantsTable, D0Seed, Reading, constants_comparison, fuzz_lemma
from podkit.models import Bdf2Start, Boundary, GramKind, InvalidArgument, Lemma, MeshKind, NumericFailure, Scheme
from podkit.pde_fem import ProblemConfig, heat_forcing, manufactured_trajectory
from podkit.pod_core import (
    mode_norms,
    pod_from_trajectory,
    projection_error_series,
    sigma_tail,
    verify_cross_norm_identity,
    verify_energy_identity,
)
from podkit.pod_rom import RomConfig, bound_report, convergence_study, nondegradation_sweep, rom_solve
from podkit.reporting import PlotKind, dumps_report, make_report, write_csv, write_plot_series, write_report
from podkit.storage import ContainerError, Storage, digest_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2

SPACES = {"l2": GramKind.MASS, "h10": GramKind.STIFFNESS}


def print_header(title: str):
    """Print a formatted header."""
    print(f"\n{'=' * 40}")
    print(f"  {title}")
    print(f"{'=' * 40}\n")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=int(os.environ.get("PODKIT_SEED", "0")))
    common.add_argument("--out", default=None, help="output directory (default $PODKIT_OUT or ./out)")
    common.add_argument("--json", action="store_true", help="print the report as JSON on stdout")

    parser = argparse.ArgumentParser(prog="podkit", description="POD error-bound toolkit")
    parser.add_argument("--version", action="version", version=f"podkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common], help="tabulate the inequality constants")
    p.add_argument("--mmax", type=int, default=10)
    p.add_argument("--reading", choices=[r.value for r in Reading], default=Reading.PRINTED.value)
    p.add_argument("--d0-seed", choices=[s.value for s in D0Seed], default=D0Seed.C_B1.value)
    p.add_argument("--compare", action="store_true", help="compare every reading with the published values")

    p = sub.add_parser("check-lemmas", parents=[common], help="fuzz the discrete inequalities")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--max-order", type=int, default=6)
    p.add_argument("--lemma", action="append", choices=[l.value for l in Lemma], help="repeatable; default all")

    p = sub.add_parser("gen", parents=[common], help="generate manufactured snapshots")
    p.add_argument("--problem", choices=[k.value for k in MeshKind], default=MeshKind.INTERVAL.value)
    p.add_argument("--boundary", choices=[b.value for b in Boundary], default=Boundary.ALL.value)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--grid", type=int, default=64, help="interval count M")
    p.add_argument("--duration", type=float, default=1.0, help="T")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--periodic", action="store_true", help="time-periodic trajectory instead of a decaying one")
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=-1.0)

    p = sub.add_parser("pod", parents=[common], help="build the POD basis from the stored snapshots")
    p.add_argument("--space", choices=sorted(SPACES), default="l2")
    p.add_argument("--drop-first", dest="drop_first", action="store_true", help="default for periodic snapshots")
    p.add_argument("--keep-first", dest="drop_first", action="store_false")
    p.set_defaults(drop_first=None)
    p.add_argument("--subtract-mean", action="store_true")

    p = sub.add_parser("proj-errors", parents=[common], help="projection errors and the energy identities")
    p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("rom", parents=[common], help="run the reduced heat solver")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.EULER.value)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--bdf2-start", choices=[s.value for s in Bdf2Start], default=Bdf2Start.PROJECT.value)

    p = sub.add_parser("bounds", parents=[common], help="evaluate every error bound")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--m", type=_int_list, default=[2, 3, 4, 5])
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)

    p = sub.add_parser("sweep", parents=[common], help="non-degradation or convergence tables")
    p.add_argument("--table", choices=["nondegrade", "convergence"], required=True)
    p.add_argument("--grid", type=_int_list, default=None)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.EULER.value)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--workers", type=int, default=None)
    return parser


class PodkitCli:
    """Runs one subcommand against an output directory."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.seed = args.seed
        self.storage = Storage(args.out)

    def run(self) -> int:
        handler = getattr(self, "cmd_" + self.args.command.replace("-", "_"))
        return handler()

    def _emit(self, name: str, report: dict, lines: List[str], title: str):
        write_report(self.storage.path(name), report)
        if self.args.json:
            sys.stdout.write(dumps_report(report))
            return
        print_header(title)
        for line in lines:
            print(line)

    def _problem(self):
        config = self.storage.read_problem()
        p, spec, grid = config.build()
        return config, p, spec, grid

    def _digests(self, *names: str) -> dict:
        digests = {}
        if "problem" in names:
            digests["problem.json"] = digest_file(self.storage.problem_file)
        if "snapshots" in names:
            digests["snapshots/data.f64le"] = self.storage.snapshot_digest()
        if "basis" in names:
            digests["basis/modes.f64le"] = self.storage.basis_digest()
        return digests

    def _reference(self, p, spec, grid, kind: GramKind):
        """Stored snapshots re-attached to a space of the problem, plus the derivative sampler."""
        stored = self.storage.read_snapshots()
        if stored.grid != grid or stored.dim != p.dofs:
            raise ContainerError("snapshots do not match problem.json")
        _, sampler = manufactured_trajectory(spec, p, grid)
        return stored.with_space(p.space(kind)), sampler

    # subcommands

    def cmd_constants(self) -> int:
        a = self.args
        table = ConstantsTable(a.mmax, Reading(a.reading), D0Seed(a.d0_seed))
        body = table.to_dict()
        if a.compare:
            body["comparison"] = constants_comparison()
        report = make_report("podkit-constants-v1", body, self.seed)
        lines = [f"c_A = {table.c_A:.6f}   c_A1 = {table.c_A1:.5f}   c_B1 = {table.c_B1:.4f}", ""]
        for row in body["rows"]:
            value = f"{row['c_m']:.6g}" if row["c_m"] is not None else f"1e{row['log10_c_m']:.1f}"
            lines.append(f"  c_{row['m']:<4d} {value}")
        if a.compare:
            lines.append("")
            for entry in body["comparison"]:
                mark = "reproduces" if entry["reproduces_tables"] else "differs"
                lines.append(f"  {entry['reading']:8s} {entry['d0_seed']:16s} {mark}")
        self._emit("constants.json", report, lines, f"Constants ({a.reading}, d0 = {a.d0_seed})")
        return EXIT_OK

    def cmd_check_lemmas(self) -> int:
        a = self.args
        if a.trials < 1:
            raise InvalidArgument(f"--trials must be >= 1, got {a.trials}")
        if a.max_order < 1:
            raise InvalidArgument(f"--max-order must be >= 1, got {a.max_order}")
        lemmas = [Lemma(name) for name in a.lemma] if a.lemma else list(Lemma)
        summaries = [fuzz_lemma(lemma, a.trials, self.seed, max_order=a.max_order) for lemma in lemmas]
        violations = sum(s.violations for s in summaries)
        body = {
            "trials": a.trials,
            "max_order": a.max_order,
            "violations": violations,
            "lemmas": [s.to_dict() for s in summaries],
        }
        report = make_report("podkit-lemmas-v1", body, self.seed)
        lines = [
            f"  {s.lemma:14s} checks {s.checks:7d}  violations {s.violations:4d}  worst ratio {s.worst.ratio:.6f}"
            for s in summaries if s.worst is not None
        ]
        self._emit("lemmas.json", report, lines, "Discrete inequality fuzzing")
        return EXIT_VIOLATION if violations else EXIT_OK

    def cmd_gen(self) -> int:
        a = self.args
        config = ProblemConfig(
            kind=a.problem,
            cells=a.cells,
            boundary=a.boundary,
            nu=a.nu,
            T=a.duration,
            M=a.grid,
            periodic=a.periodic,
            modes=a.modes,
            decay=a.decay,
            rate=a.rate,
        )
        p, spec, grid = config.build()
        traj, sampler = manufactured_trajectory(spec, p, grid)
        self.storage.write_problem(config)
        self.storage.write_snapshots(traj)
        norms = derivative_norm_series(sampler, grid.nodes, 1, p.space(GramKind.MASS))
        write_plot_series(self.storage.path("deriv_norms.csv"), PlotKind.DERIV_NORMS, grid.nodes, norms)
        body = {"problem": config.to_dict(), "dofs": p.dofs, "periodic": traj.periodic}
        report = make_report("podkit-gen-v1", body, self.seed, self._digests("problem", "snapshots"))
        lines = [f"  {p.kind.value} mesh, {p.cells} cells, {p.dofs} dofs", f"  M = {grid.M}, T = {grid.T:g}, periodic = {traj.periodic}"]
        self._emit("gen.json", report, lines, "Snapshots")
        return EXIT_OK

    def cmd_pod(self) -> int:
        a = self.args
        _, p, spec, grid = self._problem()
        kind = SPACES[a.space]
        traj, _ = self._reference(p, spec, grid, kind)
        drop_first = traj.periodic if a.drop_first is None else a.drop_first
        if a.drop_first is None and drop_first:
            logger.info("Periodic snapshots: dropping u^0 (pass --keep-first to keep it)")
        basis = pod_from_trajectory(traj, drop_first=drop_first, subtract_mean=a.subtract_mean)
        self.storage.write_basis(basis)
        tails = sigma_tail(basis)
        write_plot_series(self.storage.path("sigma_tail.csv"), PlotKind.SIGMA_TAIL, range(basis.J + 1), tails)
        norms = mode_norms(basis, p.space(GramKind.MASS))
        write_plot_series(self.storage.path("mode_norms.csv"), PlotKind.MODE_NORMS, range(1, basis.J + 1), norms)
        body = {
            "space": kind.value,
            "drop_first": drop_first,
            "subtract_mean": a.subtract_mean,
            "J": basis.J,
            "remainder": basis.remainder_sigma.shape[0],
            "sigma": basis.sigma,
            "sigma_tail": tails,
            "mode_l2_norms": norms,
        }
        report = make_report("podkit-pod-v1", body, self.seed, self._digests("problem", "snapshots", "basis"))
        lines = [f"  rank J = {basis.J} in the {kind.value} inner product"]
        lines += [f"  sigma_{k + 1:<3d} {s:.6e}" for k, s in enumerate(basis.sigma[:10])]
        self._emit("pod.json", report, lines, "POD basis")
        return EXIT_OK

    def _basis(self, p):
        kind = self.storage.basis_kind()
        return self.storage.read_basis(p.space(kind))

    def cmd_proj_errors(self) -> int:
        r = self.args.r
        _, p, spec, grid = self._problem()
        basis = self._basis(p)
        if not 0 <= r <= basis.J:
            raise InvalidArgument(f"--r must be in 0..{basis.J}, got {r}")
        traj, _ = self._reference(p, spec, grid, basis.space.kind)
        other_kind = GramKind.STIFFNESS if basis.space.kind is GramKind.MASS else GramKind.MASS
        other = p.space(other_kind)
        energy = verify_energy_identity(basis, traj, r)
        cross = verify_cross_norm_identity(basis, traj, r, other)
        errors = projection_error_series(basis, r, traj)
        by_r = [projection_error_series(basis, k, traj).maximum for k in range(basis.J + 1)]
        write_plot_series(self.storage.path("error_vs_r.csv"), PlotKind.ERROR_VS_R, range(basis.J + 1), by_r)
        body = {
            "r": r,
            "other_space": other_kind.value,
            "max_error": errors.maximum,
            "quadratic_mean_error": errors.quadratic_mean,
            "errors": errors.errors,
            "identities": [energy.to_dict(), cross.to_dict()],
        }
        report = make_report("podkit-proj-errors-v1", body, self.seed, self._digests("problem", "snapshots", "basis"))
        lines = [
            f"  max error      {errors.maximum:.6e}",
            f"  energy identity  {'ok' if energy.passed else 'FAILED'}  (lhs {energy.lhs:.6e}, rhs {energy.rhs:.6e})",
            f"  cross-norm identity  {'ok' if cross.passed else 'FAILED'}  (lhs {cross.lhs:.6e}, rhs {cross.rhs:.6e})",
        ]
        self._emit("proj_errors.json", report, lines, f"Projection errors (r = {r})")
        return EXIT_OK if energy.passed and cross.passed else EXIT_VIOLATION

    def cmd_rom(self) -> int:
        a = self.args
        _, p, spec, grid = self._problem()
        basis = self._basis(p)
        reference, _ = self._reference(p, spec, grid, GramKind.MASS)
        result = rom_solve(p, basis, RomConfig(Scheme(a.scheme), a.r, Bdf2Start(a.bdf2_start)), heat_forcing(p, spec), reference)
        body = result.to_dict()
        report = make_report("podkit-rom-v1", body, self.seed, self._digests("problem", "snapshots", "basis"))
        lines = [f"  {a.scheme}, r = {a.r}: max L2 error {result.max_error:.6e}"]
        self._emit("rom.json", report, lines, "Reduced-order solve")
        return EXIT_OK

    def cmd_bounds(self) -> int:
        a = self.args
        _, p, spec, grid = self._problem()
        basis = self._basis(p)
        reference, sampler = self._reference(p, spec, grid, basis.space.kind)
        forcing = heat_forcing(p, spec) if a.scheme else None
        report_obj = bound_report(p, basis, a.r, reference, sampler, a.m, a.scheme, forcing)
        body = report_obj.to_dict()
        report = make_report("podkit-bounds-v1", body, self.seed, self._digests("problem", "snapshots", "basis"))
        lines = []
        for entry in report_obj.entries:
            m = entry.params.get("m")
            label = entry.lemma_id if m is None else f"{entry.lemma_id}(m={m})"
            status = "ok" if entry.passed else "VIOLATED"
            lines.append(f"  {label:18s} lhs {entry.lhs:.4e}  rhs {entry.rhs:.4e}  {status}")
        self._emit("bounds.json", report, lines, f"Error bounds (r = {a.r})")
        return EXIT_OK if report_obj.all_passed else EXIT_VIOLATION

    def cmd_sweep(self) -> int:
        a = self.args
        if a.table == "nondegrade":
            grids = a.grid or [64, 128, 256, 512]
            rows = nondegradation_sweep(grids, a.r, cells=a.cells, workers=a.workers)
            fields = ["M", "r", "J", "max_projection_error", "tail", "degraded_bound"]
        else:
            levels = a.grid or [128, 256, 512, 1024, 2048]
            rows = convergence_study(a.scheme, levels, cells=a.cells, workers=a.workers)
            fields = ["M", "dt", "scheme", "max_l2_error", "observed_order"]
        write_csv(self.storage.path(f"sweep_{a.table}.csv"), rows, fields)
        report = make_report(f"podkit-sweep-{a.table}-v1", {"table": a.table, "rows": rows}, self.seed)
        lines = ["  " + "  ".join(f"{name:>14s}" for name in fields)]
        for row in rows:
            cells = []
            for name in fields:
                value = row.get(name, "")
                cells.append(f"{value:>14.6g}" if isinstance(value, float) else f"{str(value):>14s}")
            lines.append("  " + "  ".join(cells))
        self._emit(f"sweep_{a.table}.json", report, lines, f"Sweep: {a.table}")
        return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("PODKIT_LOG_LEVEL", "WARNING").upper(),
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_ERROR
    try:
        return PodkitCli(args).run()
    except (InvalidArgument, ContainerError, OSError) as e:
        print(f"podkit: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except NumericFailure as e:
        print(f"podkit: numerical failure: {e}", file=sys.stderr)
        return EXIT_VIOLATION
