"""Exception hierarchy shared by the library and the command line.

Every exception carries a stable ``code`` that the CLI prints in its
diagnostics. Validation errors are ``ValueError`` subclasses and
convergence errors are ``RuntimeError`` subclasses.
"""


class ExtremalError(Exception):
    """Base class for all extremal_vectors errors."""

    code = "error"


class ProblemValidationError(ExtremalError, ValueError):
    """A problem, grid or argument violates a documented precondition."""

    code = "invalid_problem"


class ProblemParseError(ProblemValidationError):
    """The problem document is not well formed."""

    code = "parse"


class DimensionMismatchError(ProblemValidationError):
    """Vector and operator dimensions do not agree."""

    code = "dimension_mismatch"


class EpsilonOutOfRangeError(ProblemValidationError):
    """The radius lies outside ]0, ‖x₀‖[."""

    code = "epsilon_out_of_range"


class InfeasibleError(ProblemValidationError):
    """The ball B(x₀, ε] does not meet the range of the operator."""

    code = "infeasible"


class CenterInsideBallError(ProblemValidationError):
    """A perturbed center falls inside the forbidden ball B(0, ε]."""

    code = "center_inside_ball"


class GridError(ProblemValidationError):
    """A parameter grid is empty, unordered or out of range."""

    code = "invalid_grid"


class SingularOperatorError(ProblemValidationError):
    """An oracle needs an invertible operator and did not get one."""

    code = "singular_operator"


class ConvergenceError(ExtremalError, RuntimeError):
    """An iterative method stopped without meeting its tolerance."""

    code = "convergence"


class MaxIterationsExceededError(ConvergenceError):
    code = "max_iterations_exceeded"


class BracketNotFoundError(ConvergenceError):
    code = "bracket_not_found"
