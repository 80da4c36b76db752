"""Brute-force certification oracles for small extremal problems.

Each oracle reaches the extremal vector by a route that shares nothing with
the Newton solver:

- angle_grid_oracle_2d: parametrize the boundary circle Ty = x₀ + ε·w(θ)
  of a real invertible 2×2 operator and minimize ‖y‖ over θ.
- boundary_sample_oracle: draw uniform unit vectors w and keep the
  smallest ‖T⁻¹(x₀ + εw)‖; an upper bound on the true minimum.
- lambda_grid_oracle: scan φ(λ) on a log grid, then bisect.

Sampling is deterministic for a fixed seed. Samples are drawn in fixed-size
blocks whose seeds are spawned from the root seed, so splitting the blocks
across workers never changes the result.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from extremal_vectors.errors import (
    BracketNotFoundError,
    DimensionMismatchError,
    MaxIterationsExceededError,
    ProblemValidationError,
    SingularOperatorError,
)
from extremal_vectors.operators import Operator, Vector, as_vector
from extremal_vectors.solver import ExtremalResult, residual_at

logger = logging.getLogger(__name__)

MIN_ANGLES = 360
MIN_SAMPLES = 100_000
MAX_SAMPLING_DIMENSION = 4
SAMPLE_BLOCK_SIZE = 8192

_BISECTION_TOL = 1e-12
_MAX_BISECTIONS = 400
_GRID_POINTS_PER_DECADE = 4

ANGLE_METHOD = "angle_grid_2d"
SAMPLE_METHOD = "boundary_sample"
LAMBDA_METHOD = "lambda_grid"


@dataclass(frozen=True, eq=False)
class OracleResult:
    """A candidate extremal vector found by an oracle.

    Attributes:
        y: The candidate vector.
        y_norm: ‖y‖.
        method: Which oracle produced it.
        samples_used: Number of boundary points or φ evaluations spent.
        lam: The λ of the λ-grid oracle; None for boundary oracles.
    """

    y: Vector
    y_norm: float
    method: str
    samples_used: int
    lam: float | None = None

    @property
    def is_point_estimate(self) -> bool:
        """False for the sampling oracle, which only bounds the minimum."""
        return self.method != SAMPLE_METHOD


@dataclass(frozen=True)
class Comparison:
    """Agreement between a solver result and an oracle result."""

    method: str
    norm_gap: float
    vector_gap: float | None
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "norm_gap": self.norm_gap,
            "vector_gap": self.vector_gap,
            "tol": self.tol,
            "passed": self.passed,
        }


def angle_grid_oracle_2d(
    op: Operator,
    x0: Vector,
    epsilon: float,
    n_angles: int = 3600,
) -> OracleResult:
    """Minimize ‖T⁻¹(x₀ + ε(cos θ, sin θ))‖ over a grid of angles.

    The best grid angle is refined with a bounded scalar minimization on
    its two neighbouring cells.

    Raises:
        ProblemValidationError: If the operator is not real 2×2 or
            n_angles < 360.
        SingularOperatorError: If the operator is not invertible.
    """
    if op.shape != (2, 2) or op.is_complex:
        raise ProblemValidationError(
            f"angle_grid_oracle_2d needs a real 2x2 operator, got {op.field} {op.shape}"
        )
    if n_angles < MIN_ANGLES:
        raise ProblemValidationError(f"n_angles must be at least {MIN_ANGLES}, got {n_angles}")
    x0 = _real_center(x0, 2)
    factor = _lu_factor(op)

    def preimage(theta: np.ndarray) -> np.ndarray:
        targets = x0[:, None] + epsilon * np.vstack([np.cos(theta), np.sin(theta)])
        return scipy.linalg.lu_solve(factor, targets)

    thetas = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    norms = np.linalg.norm(preimage(thetas), axis=0)
    best = int(np.argmin(norms))
    step = 2.0 * math.pi / n_angles

    refined = minimize_scalar(
        lambda theta: float(np.linalg.norm(preimage(np.array([theta]))[:, 0])),
        bounds=(thetas[best] - step, thetas[best] + step),
        method="bounded",
        options={"xatol": 1e-14},
    )
    theta = float(refined.x) if refined.fun <= norms[best] else float(thetas[best])
    y = preimage(np.array([theta]))[:, 0]
    return OracleResult(
        y=y,
        y_norm=float(np.linalg.norm(y)),
        method=ANGLE_METHOD,
        samples_used=n_angles + int(refined.nfev),
    )


def boundary_sample_oracle(
    op: Operator,
    x0: Vector,
    epsilon: float,
    n_samples: int = MIN_SAMPLES,
    seed: int = 0,
    *,
    workers: int = 1,
) -> OracleResult:
    """Monte-Carlo search of the boundary sphere ‖Ty − x₀‖ = ε.

    Unit vectors w come from normalized Gaussian draws (complex Gaussian
    for complex operators); each sample is y = T⁻¹(x₀ + εw). The smallest
    ‖y‖ found is an upper bound on the extremal norm.

    Raises:
        ProblemValidationError: If the dimension exceeds 4 or
            n_samples < 100000.
        SingularOperatorError: If the operator is not square and invertible.
    """
    n = op.n_rows
    if n > MAX_SAMPLING_DIMENSION:
        raise ProblemValidationError(
            f"boundary_sample_oracle supports dimension ≤ {MAX_SAMPLING_DIMENSION}, got {n}"
        )
    if n_samples < MIN_SAMPLES:
        raise ProblemValidationError(f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}")
    x0 = as_vector(x0, name="x0")
    if x0.size != n:
        raise DimensionMismatchError(f"x0 must have length {n}, got {x0.size}")
    factor = _lu_factor(op)

    n_blocks = -(-n_samples // SAMPLE_BLOCK_SIZE)
    block_seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    sizes = [min(SAMPLE_BLOCK_SIZE, n_samples - i * SAMPLE_BLOCK_SIZE) for i in range(n_blocks)]

    def run_block(index: int) -> tuple[float, int, np.ndarray]:
        rng = np.random.default_rng(block_seeds[index])
        directions = rng.standard_normal((n, sizes[index]))
        if op.is_complex:
            directions = directions + 1j * rng.standard_normal((n, sizes[index]))
        directions /= np.linalg.norm(directions, axis=0)
        candidates = scipy.linalg.lu_solve(factor, x0[:, None] + epsilon * directions)
        norms = np.linalg.norm(candidates, axis=0)
        best = int(np.argmin(norms))
        return float(norms[best]), index, candidates[:, best]

    if workers <= 1:
        block_minima = [run_block(i) for i in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            block_minima = list(pool.map(run_block, range(n_blocks)))

    y_norm, _, y = min(block_minima, key=lambda item: (item[0], item[1]))
    logger.debug(f"Sampled {n_samples} boundary points in {n_blocks} block(s); best norm {y_norm:.12e}")
    return OracleResult(y=y, y_norm=y_norm, method=SAMPLE_METHOD, samples_used=n_samples)


def lambda_grid_oracle(
    op: Operator,
    x0: Vector,
    epsilon: float,
    decades: int = 12,
) -> OracleResult:
    """Scan φ(λ) on a log grid around λ₀, then bisect the first crossing.

    The grid spans ``decades`` decades centred on λ₀ = ε‖T‖²/(‖x₀‖ − ε)
    with four points per decade. Bisection stops once
    |φ(λ) − ε| ≤ 1e-12·max(ε, 1); the returned y is evaluated at the
    returned λ.

    Raises:
        BracketNotFoundError: If φ does not cross ε inside the grid.
        MaxIterationsExceededError: If bisection cannot meet the tolerance.
    """
    x0 = as_vector(x0, name="x0")
    x0_norm = float(np.linalg.norm(x0))
    if not 0 < epsilon < x0_norm:
        raise ProblemValidationError(f"epsilon={epsilon!r} must lie in ]0, {x0_norm!r}[")
    tol = _BISECTION_TOL * max(epsilon, 1.0)

    center = epsilon * op.norm**2 / (x0_norm - epsilon)
    half_span = decades / 2.0
    grid = center * np.logspace(-half_span, half_span, decades * _GRID_POINTS_PER_DECADE + 1)

    evaluations = 0
    previous = None
    bracket = None
    for lam in grid:
        y, phi = residual_at(op, x0, float(lam))
        evaluations += 1
        if abs(phi - epsilon) <= tol:
            return _lambda_result(y, float(lam), evaluations)
        if phi > epsilon:
            if previous is None:
                raise BracketNotFoundError(
                    f"phi exceeds epsilon already at the grid start lambda={float(lam)!r}"
                )
            bracket = (previous, float(lam))
            break
        previous = float(lam)
    if bracket is None:
        raise BracketNotFoundError(
            f"phi stays below epsilon={epsilon!r} over {decades} decade(s) around {center!r}"
        )

    lo, hi = bracket
    for _ in range(_MAX_BISECTIONS):
        lam = 0.5 * (lo + hi)
        if lam in (lo, hi):
            break
        y, phi = residual_at(op, x0, lam)
        evaluations += 1
        if abs(phi - epsilon) <= tol:
            return _lambda_result(y, lam, evaluations)
        if phi < epsilon:
            lo = lam
        else:
            hi = lam
    raise MaxIterationsExceededError(
        f"Bisection on lambda in [{lo!r}, {hi!r}] stopped after {evaluations} evaluation(s) "
        f"with |phi - epsilon| above {tol!r}"
    )


def compare(a: ExtremalResult, b: OracleResult, tol: float) -> Comparison:
    """Compare a solver result with an oracle result.

    Point-estimate oracles pass when both |‖y_a‖ − ‖y_b‖| and ‖y_a − y_b‖
    are within tol·max(1, ‖y_a‖). The sampling oracle only bounds the
    minimum from above, so it passes when ‖y_a‖ ≤ ‖y_b‖ + tol.
    """
    norm_gap = abs(a.y_norm - b.y_norm)
    scale = max(1.0, a.y_norm)
    if not b.is_point_estimate:
        return Comparison(b.method, norm_gap, None, tol, a.y_norm <= b.y_norm + tol)
    vector_gap = float(np.linalg.norm(a.y - b.y))
    passed = norm_gap <= tol * scale and vector_gap <= tol * scale
    return Comparison(b.method, norm_gap, vector_gap, tol, passed)


def _lambda_result(y: np.ndarray, lam: float, evaluations: int) -> OracleResult:
    return OracleResult(
        y=y,
        y_norm=float(np.linalg.norm(y)),
        method=LAMBDA_METHOD,
        samples_used=evaluations,
        lam=lam,
    )


def _real_center(x0: Vector, size: int) -> np.ndarray:
    x0 = as_vector(x0, name="x0")
    if x0.size != size:
        raise DimensionMismatchError(f"x0 must have length {size}, got {x0.size}")
    if np.iscomplexobj(x0):
        raise ProblemValidationError("angle_grid_oracle_2d needs a real x0")
    return x0


def _lu_factor(op: Operator):
    if op.n_rows != op.n_cols:
        raise SingularOperatorError(f"Oracle needs a square operator, got shape {op.shape}")
    if not op.is_surjective:
        raise SingularOperatorError("Oracle needs an invertible operator")
    return scipy.linalg.lu_factor(op.matrix, check_finite=False)
