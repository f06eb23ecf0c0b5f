"""Command-line front end.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure.  Diagnostics go to stderr; data goes to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

from . import bench
from .catalog import SCHEME_NAMES, get_scheme
from .core import PROBLEMS, get_problem
from .dg import DG_NAMES, discrete_gradient
from .errors import InputError, NumericalError, SolverError, ValidationError
from .integrator import (
    Predictor,
    ReferenceMethod,
    SolverConfig,
    Strategy,
    integrate,
    integrate_reference,
)
from .sbar import check_compatibility
from .trees import check_order, enumerate_trees, tree_gamma, tree_sigma

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2

_EPILOG = f"""\
schemes: {', '.join(SCHEME_NAMES)} (or a JSON scheme file)
problems: {', '.join(PROBLEMS)} (or a JSON problem file)
discrete gradients: {', '.join(DG_NAMES)}
baselines: {', '.join(m.value for m in ReferenceMethod)}

exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure
environment: DGFLOW_THREADS caps worker threads for converge (default 1)
"""


class _Parser(argparse.ArgumentParser):
    """Usage errors become validation errors (exit 1) instead of argparse's exit 2."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _float_list(text: str) -> list[float]:
    return [_float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="dgflow", description="Energy-preserving discrete gradient integrators.",
                     epilog=_EPILOG, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, scheme_required=True):
        p.add_argument("--problem", default="henon-heiles", help="problem name or JSON file")
        if scheme_required:
            p.add_argument("--scheme", required=True, help="scheme name or JSON file")
        p.add_argument("--dg", default="avf", help="discrete gradient kind")
        p.add_argument("--tol", type=_float, default=1e-12, help="Newton residual tolerance")
        p.add_argument("--max-iter", type=_int, default=50, help="iterations per step")
        p.add_argument("--strategy", default="newton", choices=[s.value for s in Strategy])
        p.add_argument("--predictor", default="euler", choices=[s.value for s in Predictor])
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("integrate", help="integrate and write the trajectory as CSV",
                       epilog=_EPILOG, formatter_class=fmt)
    common(p, scheme_required=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scheme", help="scheme name or JSON file")
    group.add_argument("--baseline", choices=[m.value for m in ReferenceMethod],
                       help="non-conservative reference method instead of a scheme")
    p.add_argument("--h", type=_float, required=True, help="step size")
    p.add_argument("--t-end", type=_float, required=True, help="final time")

    p = sub.add_parser("energy", help="write the energy error series t,H_err as CSV",
                       epilog=_EPILOG, formatter_class=fmt)
    common(p, scheme_required=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scheme", help="scheme name or JSON file")
    group.add_argument("--baseline", choices=[m.value for m in ReferenceMethod])
    p.add_argument("--h", type=_float, required=True)
    p.add_argument("--t-end", type=_float, required=True)
    p.add_argument("--plot", help="also write a gnuplot script reading --out")

    p = sub.add_parser("converge", help="convergence study, CSV h,error,slope_running",
                       epilog=_EPILOG, formatter_class=fmt)
    common(p)
    p.add_argument("--h-list", type=_float_list, help="comma-separated decreasing step sizes")
    p.add_argument("--t-end", type=_float, help="final time (default: first multiple of max h >= 1)")
    p.add_argument("--reference", default="gl4-fine", choices=[r.value for r in bench.ReferenceKind])
    p.add_argument("--plot", help="also write a gnuplot script reading --out")

    p = sub.add_parser("trees", help="list trees with gamma and sigma")
    p.add_argument("--order", type=_int, required=True)
    p.add_argument("--kind", default="mono", choices=["mono", "bicolored", "shaped"])
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("check-order", help="order-condition residuals as CSV",
                       epilog=_EPILOG, formatter_class=fmt)
    p.add_argument("--scheme", required=True, help="scheme name or JSON file")
    p.add_argument("--order", type=_int, required=True)
    p.add_argument("--series", default="b", choices=["b", "p", "g"])
    p.add_argument("--out", help="output file (default: stdout)")
    return parser


def _config(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter,
                        strategy=Strategy(args.strategy), predictor=Predictor(args.predictor))


def _write(text: str, path: str | None, stdout: TextIO) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _warn_steps(h: float, t_end: float, stderr: TextIO) -> None:
    ratio = t_end / h
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        stderr.write(f"warning: t_end/h = {ratio:.12g} is not an integer; "
                     f"the run stops at the last whole step before t_end\n")


def _trajectory(args, stderr):
    problem = get_problem(args.problem)
    cfg = _config(args)
    _warn_steps(args.h, args.t_end, stderr)
    if args.baseline:
        return integrate_reference(args.baseline, problem, args.h, args.t_end, cfg)
    scheme = get_scheme(args.scheme)
    dg = discrete_gradient(args.dg)
    check_compatibility(scheme, problem.system, dg)
    return integrate(problem, dg, scheme, args.h, args.t_end, cfg)


def _cmd_integrate(args, stdout, stderr):
    traj = _trajectory(args, stderr)
    _write(traj.csv_text(), args.out, stdout)
    stderr.write(f"{traj.label}: {len(traj) - 1} steps, max |H - H0| = {traj.max_energy_drift:.3e}\n")


def _cmd_energy(args, stdout, stderr):
    traj = _trajectory(args, stderr)
    drift = bench.energy_drift(traj)
    _write(drift.to_csv(), args.out, stdout)
    if args.plot:
        _write(bench.drift_plot_script([(args.out or "energy.csv", traj.label)]), args.plot, stdout)
    stderr.write(f"{traj.label}: max |H - H0| = {drift.max_abs:.3e}\n")


def _cmd_converge(args, stdout, stderr):
    problem = get_problem(args.problem)
    scheme = get_scheme(args.scheme)
    dg = discrete_gradient(args.dg)
    report = bench.run_convergence(problem, scheme, dg, args.h_list, args.t_end,
                                   args.reference, cfg=_config(args))
    _write(report.to_csv(), args.out, stdout)
    if args.plot:
        script = bench.convergence_plot_script([(args.out or "convergence.csv", f"{scheme.name}/{dg.kind.value}")],
                                               reference_orders=(scheme.nominal_order,))
        _write(script, args.plot, stdout)
    for msg in report.failures:
        stderr.write(f"failed: {msg}\n")
    stderr.write(report.summary() + "\n")


def _cmd_trees(args, stdout, stderr):
    trees = enumerate_trees(args.order, args.kind)
    text = "".join(f"{t.encode()}\t{tree_gamma(t)}\t{tree_sigma(t)}\n" for t in trees)
    _write(text, args.out, stdout)
    stderr.write(f"{len(trees)} {args.kind} trees of order {args.order} (columns: tree, gamma, sigma)\n")


def _cmd_check_order(args, stdout, stderr):
    scheme = get_scheme(args.scheme)
    report = check_order(scheme, args.order, args.series)
    _write(report.to_csv(), args.out, stdout)
    verdict = "pass" if report.passed else f"fail ({len(report.failures())} trees)"
    stderr.write(f"{scheme.name} {report.series.value}-series order {args.order}: {verdict}, "
                 f"max residual {report.max_residual:.3e}, conditions hold through order {report.achieved_order()}\n")


_COMMANDS = {
    "integrate": _cmd_integrate,
    "energy": _cmd_energy,
    "converge": _cmd_converge,
    "trees": _cmd_trees,
    "check-order": _cmd_check_order,
}


def run_cli(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    """Run one command and return its exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = parser.parse_args(argv or ["--help"])
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        _COMMANDS[args.command](args, stdout, stderr)
    except ValidationError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except SolverError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        if exc.partial is not None and hasattr(exc.partial, "times"):
            stderr.write(f"stopped at t = {exc.partial.times[-1]:g}\n")
        return EXIT_NUMERICAL
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
