"""
Command-line entry points: solve, envelope, eigenpair, subcheck and verify.

Every command reads a run config (TOML or JSON), writes report.json and field
dumps to its output directory and exits 0 on success, 2 on invalid input and
3 when a solver does not converge. Artifacts of a failed run are written
before exiting.
"""

import logging
import sys
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NoReturn

import click
import numpy as np

from .__version__ import __version__
from .cones import subsolution_check
from .config import RunConfig, load_run_config, parse_run_config
from .constants import (
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_PROPERTY_FAILURE,
    EXIT_VALIDATION,
)
from .diagnostics import estimate_monitor
from .dirs import new_run_dir
from .envelope import EnvelopeResult, barrier_check, compute_envelope, contact_set, mask_mismatch
from .errors import ConeViolation, DivergenceError, DomainError, NonConvergenceError
from .init import init, init_logging
from .oracles import psor_obstacle
from .report import write_field, write_report, write_residual_history, write_trend_csv
from .solver import solve_degenerate, solve_eigenpair, solve_nondegenerate
from .torus import HermitianFormField, ScalarField, norms
from .util import console, path_with_tilde, timed
from .verify import verify as run_verify

logger = logging.getLogger(__name__)


@dataclass
class Run:
    """A command invocation: its config, where it writes and what it reports."""

    config: RunConfig
    out_dir: Path
    binary: bool = False
    report: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.report.setdefault("config_echo", self.config.to_dict())
        self.report.setdefault("timings", {})

    @property
    def timings(self) -> dict[str, float]:
        return self.report["timings"]

    def dump(self, name: str, values: ScalarField | np.ndarray, grid=None) -> Path:
        return write_field(self.out_dir, name, values, grid, self.binary)


def run_options(config_required: bool = True):
    """The options every command shares."""

    def decorator(f):
        f = click.option("-v", "--verbose", is_flag=True, help="Show verbose output.")(f)
        f = click.option(
            "--binary",
            is_flag=True,
            help="Dump fields as little-endian float64 (.bin + .json header) instead of CSV.",
        )(f)
        f = click.option(
            "--out",
            type=click.Path(file_okay=False, path_type=Path),
            default=None,
            help="Output directory. Defaults to a fresh directory under the runs dir.",
        )(f)
        f = click.option(
            "--threads",
            type=int,
            default=None,
            help="Cap on worker threads (FFT workers, BLAS pools, verify processes).",
        )(f)
        f = click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            required=config_required,
            default=None,
            help="Run config, TOML or JSON.",
        )(f)
        return f

    return decorator


def _start(
    command: str,
    config_path: Path | None,
    threads: int | None,
    out: Path | None,
    verbose: bool,
    binary: bool,
) -> tuple[Run, int | None]:
    init_logging(verbose)
    try:
        threads = init(threads)
        if config_path is None:
            config = parse_run_config({}, command)
        else:
            config = load_run_config(config_path, command)
    except DomainError as e:
        logger.error(f"Invalid input: {e}")
        sys.exit(EXIT_VALIDATION)

    if out is None and config.output_dir:
        out = Path(config.output_dir).expanduser()
    if out is None:
        out = new_run_dir(command)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(f"Writing artifacts to {path_with_tilde(out)}")
    return Run(config, out, binary), threads


def _error_record(e: Exception) -> dict[str, Any]:
    if isinstance(e, ConeViolation):
        return e.to_dict()
    witness = getattr(e, "witness", None)
    return {
        "error": type(e).__name__,
        "message": str(e),
        "witness": list(witness) if witness is not None else None,
    }


def _execute(run: Run, body: Callable[[Run], int]) -> NoReturn:
    """Runs ``body``, maps failures to exit codes and always writes the report."""
    try:
        code = body(run)
    except DomainError as e:
        logger.error(f"Invalid input: {e}")
        run.report["error"] = _error_record(e)
        code = EXIT_VALIDATION
    except (DivergenceError, NonConvergenceError) as e:
        logger.error(f"Solver failed: {e}")
        run.report["error"] = _error_record(e)
        if e.report is not None:
            run.report.setdefault("solve_report", e.report.to_dict())
            write_residual_history(run.out_dir, e.report)
        code = EXIT_NONCONVERGENCE
    path = write_report(run.out_dir, run.report)
    console.log(f"Report written to {path_with_tilde(path)}")
    sys.exit(code)


def _fields(config: RunConfig):
    grid = config.grid.build()
    op = config.operator.build(grid.n)
    theta = config.theta.build(grid)
    h = config.h.build(grid)
    return grid, op, theta, h


@click.group()
@click.version_option(__version__, prog_name="hessenv")
def main():
    """
    Solvers for fully non-linear eigenvalue equations f(λ(θ + i∂∂̄u)) = h on
    flat complex tori, and for (θ, m)-subharmonic envelopes.
    """


@main.command()
@run_options()
def subcheck(config_path, threads, out, verbose, binary):
    """Certify u̲ (default 0) as a C-subsolution for f = h."""
    run, _ = _start("subcheck", config_path, threads, out, verbose, binary)
    _execute(run, _subcheck)


def _subcheck(run: Run) -> int:
    grid, op, theta, h = _fields(run.config)
    u_sub = grid.zeros() if run.config.u_sub is None else run.config.u_sub.build(grid, "u_sub")
    with timed(run.timings, "subcheck"):
        cert = subsolution_check(op, theta, u_sub, h)
    run.report["certificate"] = cert.to_dict()
    verdict = "accepted" if cert.accepted else "rejected"
    console.print(f"Subsolution {verdict}: σ0 = {cert.sigma_0:.6g}, worst point {cert.worst_point}")
    return EXIT_OK


@main.command()
@run_options()
def solve(config_path, threads, out, verbose, binary):
    """Solve f(λ(θ + i∂∂̄u)) = h + b for (u, b)."""
    run, _ = _start("solve", config_path, threads, out, verbose, binary)
    _execute(run, _solve)


def _solve(run: Run) -> int:
    config = run.config
    grid, op, theta, h = _fields(config)
    if config.u_sub is not None:
        cert = subsolution_check(op, theta, config.u_sub.build(grid, "u_sub"), h)
        run.report["certificate"] = cert.to_dict()
    with timed(run.timings, "solve"):
        if config.degenerate:
            u, report = solve_degenerate(op, theta, h, config.solver)
        else:
            u, report = solve_nondegenerate(op, theta, h, config.solver)
    run.report["solve_report"] = report.to_dict()
    run.report["norms"] = norms(u).to_dict()
    with timed(run.timings, "estimate"):
        run.report["estimate"] = estimate_monitor(u, theta, op).to_dict()
    run.dump("u", u)
    write_residual_history(run.out_dir, report)
    console.print(
        f"Solved {op}: b = {report.constant:.10g}, residual {report.residual:.2e}"
        f" after {report.iterations} Newton steps"
    )
    return EXIT_OK


@main.command()
@run_options()
def eigenpair(config_path, threads, out, verbose, binary):
    """Solve σ_m(θ + i∂∂̄u) = c·C(n,m)·h for (u, c) with h >= 0."""
    run, _ = _start("eigenpair", config_path, threads, out, verbose, binary)
    _execute(run, _eigenpair)


def _eigenpair(run: Run) -> int:
    _, op, theta, h = _fields(run.config)
    with timed(run.timings, "eigenpair"):
        u, c, report = solve_eigenpair(op, theta, h, run.config.solver)
    run.report["solve_report"] = report.to_dict()
    run.report["eigenvalue"] = c
    run.report["c_settled"] = report.extra["c_settled"]
    run.dump("u", u)
    write_residual_history(run.out_dir, report)
    console.print(f"Eigenvalue constant c = {c:.10g} (sequence {report.extra['c_sequence']})")
    if not report.extra["c_settled"]:
        console.print("[yellow]The c-sequence is not settling; extend eps_reg_schedule.[/yellow]")
    return EXIT_OK


@main.command()
@run_options()
def envelope(config_path, threads, out, verbose, binary):
    """Compute the (θ, m)-subharmonic envelope P(h) by penalization."""
    run, _ = _start("envelope", config_path, threads, out, verbose, binary)
    _execute(run, _envelope)


def _psor_comparison(
    theta: HermitianFormField, h: ScalarField, result: EnvelopeResult, run: Run
) -> dict[str, Any]:
    """P and K against the projected-SOR envelope, for m = 1."""
    assert result.P is not None and result.K is not None
    reference = psor_obstacle(theta, h, run.config.oracle)
    c_ratio = max(s.overshoot_ratio for s in result.states)
    mask = contact_set(
        reference, h, result.states[-1].eps, c_ratio, run.config.envelope.contact_tol_factor
    )
    run.dump("P_psor", reference)
    return {
        "sup_distance": float(np.abs(result.P.values - reference.values).max()),
        "mask_mismatch": mask_mismatch(result.K, mask),
        "contact_fraction": float(mask.mean()),
    }


def _envelope(run: Run) -> int:
    config = run.config
    grid, op, theta, h = _fields(config)
    m = op.order
    with timed(run.timings, "envelope"):
        result = compute_envelope(theta, h, m, None, config.solver, config.envelope)
    if config.envelope.barrier and result.P is not None:
        with timed(run.timings, "barrier"):
            result.barrier = barrier_check(theta, h, m, result, config.solver, config.envelope)
    # the projected-SOR oracle is a plain Python loop, so only the 1D case
    if m == 1 and grid.n == 1 and result.P is not None:
        with timed(run.timings, "oracle"):
            run.report["oracle"] = _psor_comparison(theta, h, result, run)

    run.report["envelope_result"] = result.to_dict()
    run.report["trend"] = result.trend.to_dict() if result.trend else None
    run.dump("h", h)
    if result.P is not None and result.K is not None:
        run.dump("P", result.P)
        run.dump("K", result.K, grid)
    if result.states:
        write_trend_csv(run.out_dir, result)
    for s in result.states:
        console.print(
            f"ε = {s.eps:g}: overshoot/ε = {s.overshoot_ratio:.4g},"
            f" contact fraction {s.contact_fraction:.3f}"
        )
    if not result.converged:
        logger.error(f"Penalization stopped early: {result.errors}")
        return EXIT_NONCONVERGENCE
    return EXIT_OK


@main.command("verify")
@click.argument("suite_names", nargs=-1)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Run seed, overrides the config.")
@run_options(config_required=False)
def verify_command(suite_names, seed, config_path, threads, out, verbose, binary):
    """Run the property suites (all of them when none are named)."""
    run, resolved = _start("verify", config_path, threads, out, verbose, binary)
    if seed is not None:
        run.config.seed = seed
        run.report["config_echo"]["seed"] = seed

    def body(run: Run) -> int:
        names = list(suite_names) or list(run.config.suites)
        with timed(run.timings, "verify"):
            results = run_verify(
                names, run.out_dir, parallel=resolved or 1, seed=run.config.seed
            )
        run.report["verify"] = results
        return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY_FAILURE

    _execute(run, body)


if __name__ == "__main__":
    main()
