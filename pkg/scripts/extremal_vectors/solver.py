"""Extremal vector solver and KKT verification.

The extremal vector is y(λ) = (T*T + λI)⁻¹ T*x₀ at the unique λ > 0 where
the discrepancy φ(λ) = ‖Ty(λ) − x₀‖ equals ε. The multiplier of the
stationarity relation T*(Ty − x₀) = r y is r = −λ.

λ is found with a safeguarded Newton iteration on h(λ) = φ(λ)² − ε²,
whose derivative h′(λ) = 2λ·[(T*T + λI)⁻¹y | y] costs one extra solve.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from extremal_vectors.config import KktThresholds, SolverConfig
from extremal_vectors.errors import (
    DimensionMismatchError,
    InfeasibleError,
    MaxIterationsExceededError,
    ProblemValidationError,
)
from extremal_vectors.operators import (
    Operator,
    Problem,
    Vector,
    apply_adjoint,
    as_vector,
    distance_to_range,
    real_pairing,
    regularized_solve,
)

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny
# Below this λ the regularized solution is the pseudo-inverse one to
# working precision; a bracket search reaching it means no root exists.
_LAMBDA_FLOOR = 1e-300
_POLISH_STEPS = 3

__all__ = [
    "ExtremalResult",
    "KktReport",
    "SolverConfig",
    "discrepancy_for_multiplier",
    "kkt_failures",
    "kkt_verify",
    "residual_at",
    "secular_derivative",
    "solve_extremal",
]


@dataclass(frozen=True)
class KktReport:
    """Residuals of every structural condition satisfied by an extremal vector.

    Attributes:
        collinearity_residual: ‖T*(Ty−x₀) − r̂y‖ / ‖T*(Ty−x₀)‖.
        multiplier: The estimate r̂ = [T*(Ty−x₀) | y] / ‖y‖².
        multiplier_sign_ok: Whether r̂ < 0.
        boundary_gap: |‖Ty−x₀‖ − ε|.
        cap_slack: (‖x₀‖² − ε²) − ‖Ty‖²; non-negative on the cap.
        obtuse_pairing: [Ty−x₀ | Ty]; negative at the extremal vector.
        imag_leak: |Im⟨y, T*(Ty−x₀)⟩| / ‖y‖²; zero for real data.
        y_norm: ‖y‖.
    """

    collinearity_residual: float
    multiplier: float
    multiplier_sign_ok: bool
    boundary_gap: float
    cap_slack: float
    obtuse_pairing: float
    imag_leak: float
    y_norm: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ExtremalResult:
    """The extremal vector y_{x₀,ε} and its multiplier r = −λ < 0."""

    y: Vector
    r: float
    residual_norm: float
    iterations: int
    kkt: KktReport

    @property
    def lam(self) -> float:
        return -self.r

    @property
    def y_norm(self) -> float:
        return float(np.linalg.norm(self.y))

    def to_dict(self) -> dict:
        return {
            "y": self.y,
            "y_norm": self.y_norm,
            "r": self.r,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "kkt": self.kkt.to_dict(),
        }


def residual_at(op: Operator, x0: Vector, lam: float) -> tuple[Vector, float]:
    """Evaluate the regularized solution and its discrepancy at λ.

    Args:
        op: The operator T.
        x0: The center x₀ (length m).
        lam: λ > 0.

    Returns:
        (y(λ), φ(λ)) with y(λ) = (T*T + λI)⁻¹T*x₀ and φ(λ) = ‖Ty(λ) − x₀‖.
    """
    x0 = as_vector(x0, name="x0")
    y = regularized_solve(op, apply_adjoint(op, x0), lam)
    phi = float(np.linalg.norm(op.matrix @ y - x0))
    return y, phi


def secular_derivative(op: Operator, x0: Vector, lam: float) -> float:
    """Return h′(λ) = d(φ²)/dλ = 2λ·[(T*T + λI)⁻¹y(λ) | y(λ)] > 0."""
    y, _ = residual_at(op, x0, lam)
    return _secular_slope(op, y, lam)


def discrepancy_for_multiplier(op: Operator, x0: Vector, r: float) -> float:
    """Return ε = φ(−r), the radius whose extremal vector has multiplier r.

    This is the inverse of ε ↦ r_ε; it is injective because φ is
    strictly increasing.

    Raises:
        ValueError: If r is not negative.
    """
    if not r < 0:
        raise ValueError(f"multiplier r must be negative, got: {r}")
    _, phi = residual_at(op, x0, -r)
    return phi


def _secular_slope(op: Operator, y: Vector, lam: float) -> float:
    z = regularized_solve(op, y, lam)
    return 2.0 * lam * real_pairing(z, y)


def solve_extremal(problem: Problem, config: SolverConfig | None = None) -> ExtremalResult:
    """Compute the extremal vector of a problem.

    The result is the unique minimal-norm y with ‖Ty − x₀‖ ≤ ε; it lies on
    the boundary ‖Ty − x₀‖ = ε within the configured tolerance.

    Args:
        problem: A validated (T, x₀, ε) triple.
        config: Solver settings. Defaults to SolverConfig().

    Returns:
        The ExtremalResult, including its KKT report.

    Raises:
        InfeasibleError: If no λ > 0 reaches the radius.
        MaxIterationsExceededError: If the iteration cap is hit.
    """
    config = config or SolverConfig()
    op, x0, epsilon = problem.op, problem.x0, problem.epsilon
    x0_norm = problem.x0_norm

    if not op.is_surjective and distance_to_range(op, x0) >= epsilon:
        raise InfeasibleError(f"dist(x0, range T) is not below epsilon={epsilon!r}")
    rhs = apply_adjoint(op, x0)
    if not np.any(rhs):
        raise InfeasibleError("T*x0 = 0: x0 is orthogonal to the range of T")

    tol = config.tol_residual_rel * max(epsilon, 1.0)
    growth = config.bracket_growth
    evaluations = 0

    def evaluate(lam: float) -> tuple[Vector, float]:
        nonlocal evaluations
        if evaluations >= config.max_iterations:
            raise MaxIterationsExceededError(
                f"No convergence within {config.max_iterations} iterations "
                f"(epsilon={epsilon!r}, last lambda={lam!r})"
            )
        evaluations += 1
        y = regularized_solve(op, rhs, lam)
        return y, float(np.linalg.norm(op.matrix @ y - x0))

    lam = config.lambda_init or epsilon * op.norm**2 / (x0_norm - epsilon)
    y, phi = evaluate(lam)

    if abs(phi - epsilon) > tol:
        lam, y, phi = _bracket_and_refine(evaluate, op, epsilon, tol, growth, lam, y, phi)
    lam, y, phi = _polish(evaluate, op, epsilon, lam, y, phi)

    kkt = kkt_verify(op, x0, epsilon, y)
    result = ExtremalResult(y=y, r=-lam, residual_norm=phi, iterations=evaluations, kkt=kkt)
    logger.debug(
        f"Converged in {evaluations} solve(s): lambda={lam:.6e}, "
        f"|phi - eps|={abs(phi - epsilon):.3e}"
    )

    failures = kkt_failures(
        kkt, x0_norm, epsilon, tol_residual_rel=config.tol_residual_rel
    )
    if failures:
        logger.warning(f"KKT checks not met for epsilon={epsilon!r}: {', '.join(failures)}")
    return result


def _bracket_and_refine(evaluate, op, epsilon, tol, growth, lam, y, phi):
    """Find [lo, hi] with φ(lo) < ε < φ(hi), then run Newton with bisection fallback."""
    lo, hi = (lam, math.inf) if phi < epsilon else (0.0, lam)

    # Geometric scan away from the initial guess until ε is bracketed
    while hi == math.inf or lo == 0.0:
        lam = lam * growth if hi == math.inf else lam / growth
        if lam < _LAMBDA_FLOOR:
            raise InfeasibleError(
                f"No lambda > 0 reaches epsilon={epsilon!r}; the problem is infeasible"
            )
        y, phi = evaluate(lam)
        if abs(phi - epsilon) <= tol:
            return lam, y, phi
        if phi < epsilon:
            lo = lam
        else:
            hi = lam
    logger.debug(f"Bracketed lambda in [{lo:.6e}, {hi:.6e}]")

    step_old = hi - lo
    step = step_old
    while True:
        h = phi**2 - epsilon**2
        slope = _secular_slope(op, y, lam)
        candidate = lam - h / slope if slope > 0 else math.nan

        # Bisect when Newton leaves the bracket or is not shrinking fast enough
        if not lo < candidate < hi or abs(2.0 * h) > abs(step_old * slope):
            step_old = step
            candidate = math.sqrt(lo * hi) if hi > growth * lo else 0.5 * (lo + hi)
            if candidate in (lo, hi):
                raise MaxIterationsExceededError(
                    f"Bracket [{lo!r}, {hi!r}] collapsed before reaching epsilon={epsilon!r}; "
                    "the operator is too ill-conditioned"
                )
        else:
            step_old = step
        step = abs(candidate - lam)

        lam = candidate
        y, phi = evaluate(lam)
        if abs(phi - epsilon) <= tol:
            return lam, y, phi
        if phi < epsilon:
            lo = lam
        else:
            hi = lam


def _polish(evaluate, op, epsilon, lam, y, phi):
    """Take Newton steps past the tolerance while they reduce |φ − ε|."""
    for _ in range(_POLISH_STEPS):
        gap = abs(phi - epsilon)
        if gap == 0.0:
            break
        slope = _secular_slope(op, y, lam)
        if not slope > 0:
            break
        candidate = lam - (phi**2 - epsilon**2) / slope
        if not (math.isfinite(candidate) and candidate > 0):
            break
        try:
            y_new, phi_new = evaluate(candidate)
        except MaxIterationsExceededError:
            break
        if abs(phi_new - epsilon) >= gap:
            break
        lam, y, phi = candidate, y_new, phi_new
    return lam, y, phi


def kkt_verify(op: Operator, x0: Vector, epsilon: float, y: Vector) -> KktReport:
    """Measure every structural condition of an extremal vector candidate.

    No pass/fail decision is made here; see kkt_failures.

    Args:
        op: The operator T.
        x0: The center x₀.
        epsilon: The radius ε.
        y: The candidate vector (nonzero).

    Returns:
        The KktReport for (op, x0, epsilon, y).

    Raises:
        ProblemValidationError: If y is the zero vector.
        DimensionMismatchError: If x0 or y have the wrong length.
    """
    x0 = as_vector(x0, name="x0")
    y = as_vector(y, name="y")
    if x0.size != op.n_rows or y.size != op.n_cols:
        raise DimensionMismatchError(
            f"kkt_verify expects x0 of length {op.n_rows} and y of length {op.n_cols}, "
            f"got {x0.size} and {y.size}"
        )
    y_norm_sq = real_pairing(y, y)
    if y_norm_sq == 0.0:
        raise ProblemValidationError("kkt_verify requires a nonzero y")

    ty = op.matrix @ y
    discrepancy = ty - x0
    gradient = op.matrix.conj().T @ discrepancy

    inner = np.vdot(y, gradient)
    multiplier = float(np.real(inner)) / y_norm_sq
    imag_leak = abs(float(np.imag(inner))) / y_norm_sq

    gradient_norm = float(np.linalg.norm(gradient))
    collinearity = float(np.linalg.norm(gradient - multiplier * y)) / max(gradient_norm, _TINY)

    x0_norm = float(np.linalg.norm(x0))
    return KktReport(
        collinearity_residual=collinearity,
        multiplier=multiplier,
        multiplier_sign_ok=multiplier < 0,
        boundary_gap=abs(float(np.linalg.norm(discrepancy)) - epsilon),
        cap_slack=(x0_norm**2 - epsilon**2) - real_pairing(ty, ty),
        obtuse_pairing=real_pairing(discrepancy, ty),
        imag_leak=imag_leak,
        y_norm=math.sqrt(y_norm_sq),
    )


def kkt_failures(
    report: KktReport,
    x0_norm: float,
    epsilon: float,
    *,
    tol_residual_rel: float = SolverConfig.tol_residual_rel,
    thresholds: KktThresholds | None = None,
) -> list[str]:
    """Return the names of the KKT conditions a report does not meet.

    An empty list means every condition holds.
    """
    thresholds = thresholds or KktThresholds()
    failures = []
    if not report.collinearity_residual <= thresholds.collinearity:
        failures.append("collinearity")
    if not report.multiplier_sign_ok:
        failures.append("multiplier_sign")
    if not report.boundary_gap <= tol_residual_rel * max(epsilon, 1.0):
        failures.append("boundary")
    if not report.cap_slack >= -thresholds.cap_slack_rel * x0_norm**2:
        failures.append("cap")
    expected_pairing = report.multiplier * report.y_norm**2
    pairing_error = abs(report.obtuse_pairing - expected_pairing)
    if not report.obtuse_pairing < 0 or pairing_error > thresholds.obtuse_rel * max(
        abs(expected_pairing), _TINY
    ):
        failures.append("obtuse_pairing")
    return failures
