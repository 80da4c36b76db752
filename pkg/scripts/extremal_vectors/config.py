"""Solver configuration builder.

Merges caller overrides onto the default secular-equation settings and
validates them, producing the immutable config every solve receives.
"""

from dataclasses import dataclass

_DEFAULT_SOLVER_SETTINGS = {
    "tol_residual_rel": 1e-10,
    "max_iterations": 200,
    "bracket_growth": 4.0,
    "lambda_init": None,
}

_DEFAULT_KKT_THRESHOLDS = {
    "collinearity": 1e-8,
    "cap_slack_rel": 1e-8,
    "obtuse_rel": 1e-8,
}


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the safeguarded Newton solve of the secular equation.

    Attributes:
        tol_residual_rel: Convergence is declared once
            |‖Ty − x₀‖ − ε| ≤ tol_residual_rel · max(ε, 1).
        max_iterations: Cap on bracket expansions plus Newton/bisection steps.
        bracket_growth: Geometric factor (> 1) used while searching a bracket.
        lambda_init: Optional starting λ; the closed-form identity guess is
            used when None.
    """

    tol_residual_rel: float = _DEFAULT_SOLVER_SETTINGS["tol_residual_rel"]
    max_iterations: int = _DEFAULT_SOLVER_SETTINGS["max_iterations"]
    bracket_growth: float = _DEFAULT_SOLVER_SETTINGS["bracket_growth"]
    lambda_init: float | None = _DEFAULT_SOLVER_SETTINGS["lambda_init"]

    def __post_init__(self) -> None:
        if not self.tol_residual_rel > 0:
            raise ValueError(
                f"tol_residual_rel must be positive, got: {self.tol_residual_rel}"
            )
        if isinstance(self.max_iterations, bool) or not isinstance(self.max_iterations, int):
            raise ValueError(
                f"max_iterations must be an integer, got: {self.max_iterations!r}"
            )
        if self.max_iterations < 1:
            raise ValueError(
                f"max_iterations must be positive, got: {self.max_iterations}"
            )
        if not self.bracket_growth > 1:
            raise ValueError(
                f"bracket_growth must exceed 1, got: {self.bracket_growth}"
            )
        if self.lambda_init is not None and not self.lambda_init > 0:
            raise ValueError(
                f"lambda_init must be positive when given, got: {self.lambda_init}"
            )


@dataclass(frozen=True)
class KktThresholds:
    """Acceptance thresholds applied to a KktReport by callers."""

    collinearity: float = _DEFAULT_KKT_THRESHOLDS["collinearity"]
    cap_slack_rel: float = _DEFAULT_KKT_THRESHOLDS["cap_slack_rel"]
    obtuse_rel: float = _DEFAULT_KKT_THRESHOLDS["obtuse_rel"]


def build_solver_config(
    *,
    tol: float | None = None,
    max_iterations: int | None = None,
    bracket_growth: float | None = None,
    lambda_init: float | None = None,
) -> SolverConfig:
    """Build a validated solver config from optional overrides.

    Args:
        tol: Relative boundary tolerance. Defaults to 1e-10.
        max_iterations: Iteration cap. Defaults to 200.
        bracket_growth: Bracket expansion factor. Defaults to 4.
        lambda_init: Starting λ. Defaults to the identity closed form.

    Returns:
        A frozen SolverConfig.

    Raises:
        ValueError: If any resulting field is out of range.
    """
    settings = dict(_DEFAULT_SOLVER_SETTINGS)
    overrides = {
        "tol_residual_rel": tol,
        "max_iterations": max_iterations,
        "bracket_growth": bracket_growth,
        "lambda_init": lambda_init,
    }
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig(**settings)
