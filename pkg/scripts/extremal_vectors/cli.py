"""Command-line front end for extremal vector experiments.

Subcommands:
- solve: emit the extremal vector record for a problem document.
- sweep-eps / sweep-ray / sweep-dir: emit a parameter curve as CSV.
- probe-continuity / probe-smoothness: emit a probe report as CSV.
- verify: re-run the KKT checks on a supplied vector.
- oracle-compare: solve, run a brute-force oracle, emit both and their gap.

Exit status: 0 on success, 2 on validation errors, 3 on convergence
failures. Diagnostics go to standard error as ``error: <code>: <message>``.

Usage:
    python -m extremal_vectors.cli solve --problem problems/identity_unit.json
    python -m extremal_vectors.cli sweep-dir --problem problems/identity_counterexample.json \\
        --direction 0,2 --grid 0,3,61
"""

import argparse
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from extremal_vectors.config import build_solver_config
from extremal_vectors.errors import ConvergenceError, ExtremalError, GridError
from extremal_vectors.operators import Problem, as_vector, load_problem_file
from extremal_vectors.oracle import (
    angle_grid_oracle_2d,
    boundary_sample_oracle,
    compare,
    lambda_grid_oracle,
)
from extremal_vectors.report import render_json, write_output
from extremal_vectors.solver import kkt_failures, kkt_verify, solve_extremal
from extremal_vectors.sweeps import (
    continuity_probe,
    smoothness_probe,
    sweep_direction,
    sweep_epsilon,
    sweep_ray,
)

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "solve",
    "sweep-eps",
    "sweep-ray",
    "sweep-dir",
    "probe-continuity",
    "probe-smoothness",
    "verify",
    "oracle-compare",
)
ORACLES = ("lambda", "angle", "sample")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3

DEFAULT_SMOOTHNESS_STEPS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
DEFAULT_CONTINUITY_STEPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_COMPARE_TOL = 1e-6
DEFAULT_SAMPLES = 100_000

# Comma-list flags whose value may start with a minus sign
_LIST_FLAGS = ("--y", "--direction", "--grid", "--steps")
_NEGATIVE_LIST = re.compile(r"^-[\d.]")


@dataclass(frozen=True)
class Invocation:
    """One fully parsed command line."""

    subcommand: str
    problem_path: Path
    output_path: Path | None = None
    tol: float | None = None
    max_iterations: int | None = None
    grid: tuple[float, float, int] | None = None
    log_grid: bool = False
    direction: tuple[complex | float, ...] | None = None
    steps: tuple[float, ...] | None = None
    y: tuple[complex | float, ...] | None = None
    oracle: str = "lambda"
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    compare_tol: float = DEFAULT_COMPARE_TOL
    workers: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"Unknown subcommand: {self.subcommand}")
        if self.oracle not in ORACLES:
            raise ValueError(f"--oracle must be one of {', '.join(ORACLES)}, got: {self.oracle}")
        if self.grid is not None and self.grid[2] < 2:
            raise GridError(f"--grid count must be at least 2, got: {self.grid[2]}")
        if self.workers < 1:
            raise ValueError(f"--workers must be at least 1, got: {self.workers}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "Invocation":
        return cls(
            subcommand=args.command,
            problem_path=Path(args.problem),
            output_path=Path(args.out) if args.out else None,
            tol=args.tol,
            max_iterations=args.max_iter,
            grid=parse_grid(args.grid) if args.grid else None,
            log_grid=args.log_grid,
            direction=parse_numbers(args.direction, "--direction") if args.direction else None,
            steps=tuple(float(v.real) for v in parse_numbers(args.steps, "--steps"))
            if args.steps
            else None,
            y=parse_numbers(args.y, "--y") if args.y else None,
            oracle=args.oracle,
            seed=args.seed,
            samples=args.samples,
            compare_tol=args.compare_tol,
            workers=args.workers,
            verbose=args.verbose,
        )


def parse_numbers(text: str, flag: str) -> tuple[complex | float, ...]:
    """Parse a comma-separated list of real or complex (``1+2j``) numbers."""
    values = []
    for token in text.split(","):
        token = token.strip()
        try:
            values.append(float(token))
        except ValueError:
            try:
                values.append(complex(token.replace(" ", "")))
            except ValueError:
                raise ValueError(f"{flag} has a non-numeric entry: {token!r}") from None
    return tuple(values)


def parse_grid(text: str) -> tuple[float, float, int]:
    """Parse ``start,stop,count`` into a grid triple."""
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 3:
        raise GridError(f"--grid must be start,stop,count, got: {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise GridError(f"--grid must be start,stop,count, got: {text!r}") from None
    if count < 2:
        raise GridError(f"--grid count must be at least 2, got: {count}")
    return start, stop, count


def grid_points(grid: tuple[float, float, int], log: bool = False) -> np.ndarray:
    """Expand a grid triple into points, both endpoints included."""
    start, stop, count = grid
    if not log:
        return np.linspace(start, stop, count)
    if start <= 0 or stop <= 0:
        raise GridError(f"--log-grid needs positive endpoints, got: {start}, {stop}")
    return np.geomspace(start, stop, count)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subparser per subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", required=True, help="Problem document (JSON)")
    common.add_argument("--out", help="Output file (default: standard output)")
    common.add_argument("--tol", type=float, help="Relative boundary tolerance (default: 1e-10)")
    common.add_argument("--max-iter", type=int, help="Solver iteration cap (default: 200)")
    common.add_argument("--grid", help="Grid as start,stop,count (endpoints included)")
    common.add_argument("--log-grid", action="store_true", help="Space the grid logarithmically")
    common.add_argument("--direction", help="Direction vector u as a comma-separated list")
    common.add_argument("--steps", help="Probe step ladder as a comma-separated list")
    common.add_argument("--y", help="Vector to verify as a comma-separated list")
    common.add_argument(
        "--oracle", choices=ORACLES, default="lambda", help="Oracle for oracle-compare"
    )
    common.add_argument("--seed", type=int, default=0, help="Sampling oracle seed (default: 0)")
    common.add_argument(
        "--samples",
        type=int,
        default=DEFAULT_SAMPLES,
        help=f"Sampling oracle sample count (default: {DEFAULT_SAMPLES})",
    )
    common.add_argument(
        "--compare-tol",
        type=float,
        default=DEFAULT_COMPARE_TOL,
        help=f"Agreement tolerance for oracle-compare (default: {DEFAULT_COMPARE_TOL})",
    )
    common.add_argument("--workers", type=int, default=1, help="Worker threads (default: 1)")
    common.add_argument("--verbose", "-v", action="store_true", help="Enable INFO logging")

    parser = argparse.ArgumentParser(
        prog="extremal-vectors",
        description="Minimal-norm vectors y with ‖Ty − x₀‖ ≤ ε",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "Solve one problem",
        "sweep-eps": "Sweep the radius ε over --grid",
        "sweep-ray": "Sweep the center t·x₀ over --grid",
        "sweep-dir": "Sweep the center x₀ + t·u over --grid",
        "probe-continuity": "Measure ‖Δy‖ for shrinking center perturbations",
        "probe-smoothness": "Central differences of ε ↦ ‖y_ε‖ with Richardson ratios",
        "verify": "Run the KKT checks on --y",
        "oracle-compare": "Compare the solver with a brute-force oracle",
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse a command line, accepting comma lists that start with ``-``.

    argparse takes ``-1,0`` for an option, so ``--y -1,0`` is rewritten as
    ``--y=-1,0`` before parsing.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    joined = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in _LIST_FLAGS and i + 1 < len(argv) and _NEGATIVE_LIST.match(argv[i + 1]):
            joined.append(f"{token}={argv[i + 1]}")
            i += 2
        else:
            joined.append(token)
            i += 1
    return create_parser().parse_args(joined)


def run(invocation: Invocation) -> int:
    """Execute an invocation and write its document.

    Returns:
        The exit status: 0, 2 (validation) or 3 (convergence).
    """
    try:
        text = _execute(invocation)
    except ConvergenceError as e:
        _report_error(e.code, e)
        return EXIT_CONVERGENCE
    except ExtremalError as e:
        _report_error(e.code, e)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        _report_error("file_not_found", e)
        return EXIT_VALIDATION
    except ValueError as e:
        _report_error("invalid_argument", e)
        return EXIT_VALIDATION

    write_output(text, invocation.output_path)
    return EXIT_OK


def _report_error(code: str, error: Exception) -> None:
    print(f"error: {code}: {error}", file=sys.stderr)


def _execute(invocation: Invocation) -> str:
    problem = load_problem_file(invocation.problem_path)
    config = build_solver_config(tol=invocation.tol, max_iterations=invocation.max_iterations)
    command = invocation.subcommand
    logger.info(f"Running {command} on {invocation.problem_path}")

    if command == "solve":
        return render_json(solve_extremal(problem, config).to_dict())

    if command == "verify":
        if invocation.y is None:
            raise ValueError("verify needs --y")
        y = as_vector(invocation.y, name="y")
        report = kkt_verify(problem.op, problem.x0, problem.epsilon, y)
        failures = kkt_failures(
            report, problem.x0_norm, problem.epsilon, tol_residual_rel=config.tol_residual_rel
        )
        return render_json({"kkt": report.to_dict(), "failures": failures})

    if command == "oracle-compare":
        return render_json(_oracle_compare(problem, invocation, config))

    if command in ("probe-continuity", "probe-smoothness"):
        return _probe(problem, invocation, config).to_csv()

    if invocation.grid is None:
        raise GridError(f"{command} needs --grid")
    grid = grid_points(invocation.grid, invocation.log_grid)
    if command == "sweep-eps":
        curve = sweep_epsilon(problem.op, problem.x0, grid, config, workers=invocation.workers)
    elif command == "sweep-ray":
        curve = sweep_ray(
            problem.op, problem.x0, problem.epsilon, grid, config, workers=invocation.workers
        )
    else:
        curve = sweep_direction(
            problem.op,
            problem.x0,
            _direction(invocation),
            problem.epsilon,
            grid,
            config,
            workers=invocation.workers,
        )
    return curve.to_csv()


def _probe(problem: Problem, invocation: Invocation, config):
    if invocation.subcommand == "probe-smoothness":
        steps = invocation.steps or DEFAULT_SMOOTHNESS_STEPS
        return smoothness_probe(
            problem.op, problem.x0, problem.epsilon, steps, config, workers=invocation.workers
        )
    steps = invocation.steps or DEFAULT_CONTINUITY_STEPS
    return continuity_probe(
        problem.op,
        problem.x0,
        _direction(invocation),
        problem.epsilon,
        steps,
        config,
        workers=invocation.workers,
    )


def _direction(invocation: Invocation):
    if invocation.direction is None:
        raise ValueError(f"{invocation.subcommand} needs --direction")
    return as_vector(invocation.direction, name="direction")


def _oracle_compare(problem: Problem, invocation: Invocation, config) -> dict:
    result = solve_extremal(problem, config)
    if invocation.oracle == "angle":
        oracle_result = angle_grid_oracle_2d(problem.op, problem.x0, problem.epsilon)
    elif invocation.oracle == "sample":
        oracle_result = boundary_sample_oracle(
            problem.op,
            problem.x0,
            problem.epsilon,
            invocation.samples,
            invocation.seed,
            workers=invocation.workers,
        )
    else:
        oracle_result = lambda_grid_oracle(problem.op, problem.x0, problem.epsilon)
    comparison = compare(result, oracle_result, invocation.compare_tol)
    return {
        "solver": result.to_dict(),
        "oracle": {
            "method": oracle_result.method,
            "y": oracle_result.y,
            "y_norm": oracle_result.y_norm,
            "samples_used": oracle_result.samples_used,
            "lam": oracle_result.lam,
        },
        "comparison": comparison.to_dict(),
    }


def main(argv: list[str] | None = None) -> None:
    """CLI entry point: python -m extremal_vectors.cli <subcommand> [options]."""
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        invocation = Invocation.from_args(args)
    except ExtremalError as e:
        _report_error(e.code, e)
        sys.exit(EXIT_VALIDATION)
    except ValueError as e:
        _report_error("invalid_argument", e)
        sys.exit(EXIT_VALIDATION)
    sys.exit(run(invocation))


if __name__ == "__main__":
    main()
