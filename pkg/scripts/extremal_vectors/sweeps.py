"""One-parameter families of extremal problems.

Sweeps solve the extremal problem along a grid (ε, a ray t·x₀, or a line
x₀ + t·u) and collect the results as a Curve. Probes measure how the
extremal vector reacts to shrinking perturbations and report the evidence
as a ProbeReport.

Grid points are independent. With ``workers > 1`` they are solved on a
thread pool over the shared read-only operator; results are reassembled in
grid order, and the first failing point aborts the whole sweep.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd

from extremal_vectors.config import SolverConfig
from extremal_vectors.errors import (
    CenterInsideBallError,
    DimensionMismatchError,
    EpsilonOutOfRangeError,
    GridError,
    ProblemValidationError,
)
from extremal_vectors.operators import Operator, Problem, Vector, as_vector
from extremal_vectors.report import frame_to_csv
from extremal_vectors.solver import ExtremalResult, solve_extremal

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["param", "y_norm", "r", "residual"]
PROBE_COLUMNS = ["step", "measurement"]

_SANDWICH_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class CurveSample:
    """One converged grid point of a sweep."""

    param: float
    y_norm: float
    r: float
    residual: float
    y: Vector | None = None


@dataclass(frozen=True, eq=False)
class Curve:
    """Ordered samples of a one-parameter family of extremal vectors."""

    parameter_name: str
    samples: tuple[CurveSample, ...]

    def __post_init__(self) -> None:
        params = [s.param for s in self.samples]
        if any(b <= a for a, b in zip(params, params[1:])):
            raise GridError(f"{self.parameter_name} samples must be strictly increasing")

    @property
    def params(self) -> np.ndarray:
        return np.array([s.param for s in self.samples])

    @property
    def y_norms(self) -> np.ndarray:
        return np.array([s.y_norm for s in self.samples])

    @property
    def multipliers(self) -> np.ndarray:
        return np.array([s.r for s in self.samples])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.samples])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "param": self.params,
                "y_norm": self.y_norms,
                "r": self.multipliers,
                "residual": self.residuals,
            },
            columns=CURVE_COLUMNS,
        )

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


@dataclass(frozen=True)
class ProbeRow:
    step: float
    measurement: float


@dataclass(frozen=True, eq=False)
class ProbeReport:
    """Evidence table of a regularity probe.

    Attributes:
        probe_kind: "continuity" or "smoothness".
        rows: (step, measurement) pairs with strictly decreasing steps.
        verdict_data: Derived ratios; successive measurement ratios for
            continuity, Richardson ratios for smoothness.
        companion_rows: Secondary measurements on the same steps
            (|Δ‖y‖| for continuity). Not part of the CSV.
    """

    probe_kind: str
    rows: tuple[ProbeRow, ...]
    verdict_data: tuple[float, ...]
    companion_rows: tuple[ProbeRow, ...] = ()

    def __post_init__(self) -> None:
        steps = [row.step for row in self.rows]
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise GridError(f"{self.probe_kind} probe steps must be strictly decreasing")

    @property
    def steps(self) -> np.ndarray:
        return np.array([row.step for row in self.rows])

    @property
    def measurements(self) -> np.ndarray:
        return np.array([row.measurement for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"step": self.steps, "measurement": self.measurements},
            columns=PROBE_COLUMNS,
        )

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


@dataclass(frozen=True)
class SandwichReport:
    """Bounds ‖y_{x₀,ε+ν}‖ ≤ ‖y_{x,ε}‖ ≤ ‖y_{x₀,ε−ν}‖ for ‖x − x₀‖ = ν."""

    nu: float
    lower: float
    value: float
    upper: float
    holds: bool


def sweep_epsilon(
    op: Operator,
    x0: Vector,
    eps_grid,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
) -> Curve:
    """Solve along a strictly increasing grid of radii.

    Along the curve ‖y‖ strictly decreases and λ = −r strictly increases.

    Raises:
        GridError: If the grid is empty or not strictly increasing.
        EpsilonOutOfRangeError: If a grid point lies outside ]0, ‖x₀‖[.
    """
    x0 = as_vector(x0, name="x0")
    grid = _check_grid(eps_grid, "eps_grid")
    x0_norm = float(np.linalg.norm(x0))
    for eps in grid:
        if not 0 < eps < x0_norm:
            raise EpsilonOutOfRangeError(
                f"eps_grid point epsilon={float(eps)!r} lies outside ]0, {x0_norm!r}["
            )

    problems = [Problem(op, x0, float(eps)) for eps in grid]
    results = _solve_all(problems, config, workers)
    return _build_curve("epsilon", grid, results)


def sweep_ray(
    op: Operator,
    x0: Vector,
    epsilon: float,
    t_grid,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
) -> Curve:
    """Solve for the centers t·x₀ along a strictly increasing grid.

    Every t must exceed ε/‖x₀‖ so that t·x₀ stays outside B(0, ε]. The
    norm ‖y_{t·x₀,ε}‖ is non-decreasing along the curve.

    Raises:
        GridError: If the grid is unordered or a point is ≤ ε/‖x₀‖.
    """
    x0 = as_vector(x0, name="x0")
    grid = _check_grid(t_grid, "t_grid")
    t_min = epsilon / float(np.linalg.norm(x0))
    for t in grid:
        if not t > t_min:
            raise GridError(f"t_grid point t={float(t)!r} must exceed epsilon/‖x0‖ = {t_min!r}")

    problems = [Problem(op, t * x0, epsilon) for t in grid]
    results = _solve_all(problems, config, workers)
    return _build_curve("t", grid, results)


def sweep_direction(
    op: Operator,
    x0: Vector,
    u: Vector,
    epsilon: float,
    t_grid,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
) -> Curve:
    """Solve for the centers x₀ + t·u along a strictly increasing grid.

    No monotonicity holds in general: for T = I on x₀ = (2, −2),
    u = (0, 2), ε = 1 the norm follows 2√((t−1)² + 1) − 1.

    Raises:
        CenterInsideBallError: If some x₀ + t·u lies in B(0, ε].
    """
    x0 = as_vector(x0, name="x0")
    u = as_vector(u, name="u")
    if u.size != x0.size:
        raise DimensionMismatchError(f"u must have length {x0.size}, got {u.size}")
    grid = _check_grid(t_grid, "t_grid")

    centers = [x0 + t * u for t in grid]
    for t, center in zip(grid, centers):
        _check_outside_ball(center, epsilon, f"t={float(t)!r}")

    problems = [Problem(op, center, epsilon) for center in centers]
    results = _solve_all(problems, config, workers)
    return _build_curve("t", grid, results)


def continuity_probe(
    op: Operator,
    x0: Vector,
    u: Vector,
    epsilon: float,
    deltas,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
) -> ProbeReport:
    """Measure ‖y_{x₀+δu,ε} − y_{x₀,ε}‖ for shrinking δ.

    The direction u is normalized. Companion rows hold |Δ‖y‖|.

    Raises:
        ProblemValidationError: If u is the zero vector.
        GridError: If deltas are not positive and strictly decreasing.
        CenterInsideBallError: If x₀ or a perturbed center lies in B(0, ε].
    """
    x0 = as_vector(x0, name="x0")
    u = as_vector(u, name="u")
    if u.size != x0.size:
        raise DimensionMismatchError(f"u must have length {x0.size}, got {u.size}")
    u_norm = float(np.linalg.norm(u))
    if u_norm == 0.0:
        raise ProblemValidationError("continuity_probe needs a nonzero direction u")
    u = u / u_norm
    steps = _check_steps(deltas, "deltas")

    _check_outside_ball(x0, epsilon, "delta=0")
    centers = [x0 + delta * u for delta in steps]
    for delta, center in zip(steps, centers):
        _check_outside_ball(center, epsilon, f"delta={float(delta)!r}")

    problems = [Problem(op, center, epsilon) for center in [x0, *centers]]
    base, *perturbed = _solve_all(problems, config, workers)

    rows = tuple(
        ProbeRow(float(delta), float(np.linalg.norm(result.y - base.y)))
        for delta, result in zip(steps, perturbed)
    )
    companion = tuple(
        ProbeRow(float(delta), abs(result.y_norm - base.y_norm))
        for delta, result in zip(steps, perturbed)
    )
    ratios = tuple(
        _safe_ratio(b.measurement, a.measurement) for a, b in zip(rows, rows[1:])
    )
    return ProbeReport("continuity", rows, ratios, companion)


def smoothness_probe(
    op: Operator,
    x0: Vector,
    epsilon: float,
    h_sequence,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
) -> ProbeReport:
    """Central differences of ε ↦ ‖y_ε‖ and their Richardson ratios.

    Row i holds D_h = (‖y_{ε+h}‖ − ‖y_{ε−h}‖) / 2h. For a halving ladder
    and a C³ map, (D_h − D_{h/2}) / (D_{h/2} − D_{h/4}) tends to 4; it is
    NaN when the differences vanish (an affine map).

    Raises:
        GridError: If the steps are not positive and strictly decreasing.
        EpsilonOutOfRangeError: If ε ± max(h) leaves ]0, ‖x₀‖[.
    """
    x0 = as_vector(x0, name="x0")
    steps = _check_steps(h_sequence, "h_sequence")
    x0_norm = float(np.linalg.norm(x0))
    h_max = float(steps[0])
    if not (0 < epsilon - h_max and epsilon + h_max < x0_norm):
        raise EpsilonOutOfRangeError(
            f"epsilon ± h = {epsilon!r} ± {h_max!r} must stay inside ]0, {x0_norm!r}["
        )

    problems = []
    for h in steps:
        problems.append(Problem(op, x0, epsilon - h))
        problems.append(Problem(op, x0, epsilon + h))
    results = _solve_all(problems, config, workers)

    derivatives = [
        (above.y_norm - below.y_norm) / (2.0 * h)
        for h, below, above in zip(steps, results[0::2], results[1::2])
    ]
    rows = tuple(ProbeRow(float(h), d) for h, d in zip(steps, derivatives))
    ratios = tuple(
        _safe_ratio(d0 - d1, d1 - d2)
        for d0, d1, d2 in zip(derivatives, derivatives[1:], derivatives[2:])
    )
    return ProbeReport("smoothness", rows, ratios)


def norm_sandwich(
    op: Operator,
    x0: Vector,
    x: Vector,
    epsilon: float,
    config: SolverConfig | None = None,
) -> SandwichReport:
    """Bracket ‖y_{x,ε}‖ between the extremal norms at radii ε ± ν around x₀.

    With ν = ‖x − x₀‖, the balls nest as B(x₀, ε−ν] ⊂ B(x, ε] ⊂ B(x₀, ε+ν],
    so minimality gives ‖y_{x₀,ε+ν}‖ ≤ ‖y_{x,ε}‖ ≤ ‖y_{x₀,ε−ν}‖.

    Raises:
        EpsilonOutOfRangeError: If ν ≥ ε or ε + ν ≥ ‖x₀‖.
    """
    x0 = as_vector(x0, name="x0")
    x = as_vector(x, name="x")
    if x.size != x0.size:
        raise DimensionMismatchError(f"x must have length {x0.size}, got {x.size}")
    nu = float(np.linalg.norm(x - x0))
    if not (nu < epsilon and epsilon + nu < float(np.linalg.norm(x0))):
        raise EpsilonOutOfRangeError(
            f"nu={nu!r} needs nu < epsilon and epsilon + nu < ‖x0‖"
        )

    lower = solve_extremal(Problem(op, x0, epsilon + nu), config).y_norm
    value = solve_extremal(Problem(op, x, epsilon), config).y_norm
    upper = solve_extremal(Problem(op, x0, epsilon - nu), config).y_norm
    slack = _SANDWICH_SLACK * max(1.0, upper)
    holds = lower <= value + slack and value <= upper + slack
    return SandwichReport(nu=nu, lower=lower, value=value, upper=upper, holds=holds)


def _solve_all(
    problems: list[Problem],
    config: SolverConfig | None,
    workers: int,
) -> list[ExtremalResult]:
    """Solve problems in order; the first failure propagates."""
    logger.info(f"Solving {len(problems)} grid point(s) with {max(workers, 1)} worker(s)")
    solve = partial(solve_extremal, config=config)
    if workers <= 1 or len(problems) < 2:
        return [solve(problem) for problem in problems]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve, problems))


def _build_curve(name: str, grid: np.ndarray, results: list[ExtremalResult]) -> Curve:
    samples = tuple(
        CurveSample(
            param=float(param),
            y_norm=result.y_norm,
            r=result.r,
            residual=result.residual_norm,
            y=result.y,
        )
        for param, result in zip(grid, results)
    )
    return Curve(name, samples)


def _check_grid(values, name: str) -> np.ndarray:
    """Validate a finite, non-empty, strictly increasing grid."""
    grid = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise GridError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)):
        raise GridError(f"{name} has non-finite points")
    if np.any(np.diff(grid) <= 0):
        raise GridError(f"{name} must be strictly increasing")
    return grid


def _check_steps(values, name: str) -> np.ndarray:
    """Validate a finite sequence of positive, strictly decreasing steps."""
    steps = np.asarray(values, dtype=float)
    if steps.ndim != 1 or steps.size == 0:
        raise GridError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(steps)) or np.any(steps <= 0):
        raise GridError(f"{name} must hold finite positive steps")
    if np.any(np.diff(steps) >= 0):
        raise GridError(f"{name} must be strictly decreasing")
    return steps


def _check_outside_ball(center: Vector, epsilon: float, where: str) -> None:
    center_norm = float(np.linalg.norm(center))
    if not center_norm > epsilon:
        raise CenterInsideBallError(
            f"center at {where} has norm {center_norm!r} ≤ epsilon={float(epsilon)!r}"
        )


def _safe_ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return math.nan
    return numerator / denominator
