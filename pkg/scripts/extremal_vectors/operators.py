"""Dense operator kernel, problem type and problem document I/O.

A finite matrix with full row rank stands in for an operator with dense
range. Vectors are 1-D numpy arrays (float64 or complex128); the real
pairing [u|v] = Re⟨u|v⟩ is used wherever a real inner product is needed.

Problem document (JSON):
    {"field": "real" | "complex",        optional, default "real"
     "matrix": [[...], ...],             row-major; complex entries are [re, im]
     "x0": [...],                        length = number of rows
     "epsilon": number}                  0 < epsilon < ‖x0‖
"""

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, replace
from functools import cached_property
from numbers import Real
from pathlib import Path

import numpy as np
import scipy.linalg

from extremal_vectors.errors import (
    DimensionMismatchError,
    EpsilonOutOfRangeError,
    InfeasibleError,
    ProblemParseError,
    ProblemValidationError,
)
from extremal_vectors.report import render_json

logger = logging.getLogger(__name__)

Vector = np.ndarray

FIELDS = ("real", "complex")

_DOCUMENT_KEYS = {"field", "matrix", "x0", "epsilon"}


def as_vector(values, *, name: str = "vector") -> Vector:
    """Convert values to a finite, non-empty 1-D float or complex array.

    Raises:
        DimensionMismatchError: If the input is not a non-empty 1-D array.
        ProblemValidationError: If entries are non-numeric or non-finite.
    """
    arr = np.asarray(values)
    if arr.dtype.kind not in "biufc":
        raise ProblemValidationError(f"{name} must be numeric, got dtype {arr.dtype}")
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(
            f"{name} must be a non-empty 1-D array, got shape {arr.shape}"
        )
    arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
    if not np.all(np.isfinite(arr)):
        raise ProblemValidationError(f"{name} has non-finite entries")
    return arr


def real_pairing(u: Vector, v: Vector) -> float:
    """Return the real inner product [u|v] = Re⟨u|v⟩."""
    return float(np.real(np.vdot(u, v)))


@dataclass(frozen=True, eq=False)
class Operator:
    """An m×n dense matrix T together with its adjoint T*.

    The matrix is copied and made read-only, so an Operator can be shared
    across threads. Spectral quantities are computed once on first use.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.matrix)
        if arr.dtype.kind not in "biufc":
            raise ProblemValidationError(f"Operator matrix must be numeric, got dtype {arr.dtype}")
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionMismatchError(
                f"Operator matrix must be a non-empty 2-D array, got shape {arr.shape}"
            )
        arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
        if not np.all(np.isfinite(arr)):
            raise ProblemValidationError("Operator matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @classmethod
    def identity(cls, n: int) -> "Operator":
        return cls(np.eye(n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix)

    @property
    def field(self) -> str:
        return "complex" if self.is_complex else "real"

    @cached_property
    def singular_values(self) -> np.ndarray:
        return scipy.linalg.svdvals(self.matrix)

    @cached_property
    def norm(self) -> float:
        """Operator norm ‖T‖ (largest singular value)."""
        return float(self.singular_values[0])

    @cached_property
    def smallest_singular_value(self) -> float:
        """Smallest singular value of T*; zero unless T has full row rank."""
        if self.n_rows > self.n_cols:
            return 0.0
        return float(self.singular_values[-1])

    @property
    def is_surjective(self) -> bool:
        """Full row rank, the finite-dimensional stand-in for dense range."""
        rank_tol = max(self.shape) * np.finfo(float).eps * self.norm
        return self.smallest_singular_value > rank_tol

    @cached_property
    def gram(self) -> np.ndarray:
        """The Hermitian matrix T*T."""
        gram = self.matrix.conj().T @ self.matrix
        gram = 0.5 * (gram + gram.conj().T)
        gram.setflags(write=False)
        return gram


def apply(op: Operator, v: Vector) -> Vector:
    """Return T v.

    Raises:
        DimensionMismatchError: If len(v) differs from the column count.
    """
    v = as_vector(v, name="v")
    if v.size != op.n_cols:
        raise DimensionMismatchError(
            f"apply expects a vector of length {op.n_cols}, got {v.size}"
        )
    return op.matrix @ v


def apply_adjoint(op: Operator, v: Vector) -> Vector:
    """Return T* v (conjugate transpose applied to v).

    Raises:
        DimensionMismatchError: If len(v) differs from the row count.
    """
    v = as_vector(v, name="v")
    if v.size != op.n_rows:
        raise DimensionMismatchError(
            f"apply_adjoint expects a vector of length {op.n_rows}, got {v.size}"
        )
    return op.matrix.conj().T @ v


def regularized_solve(op: Operator, rhs: Vector, lam: float) -> Vector:
    """Solve (T*T + λI) y = rhs.

    The system matrix is Hermitian positive definite for λ > 0. It is
    Cholesky-factored for each call and the solution gets one step of
    iterative refinement.

    Args:
        op: The operator T.
        rhs: Right-hand side of length n (columns of T).
        lam: The regularization parameter λ > 0, i.e. the resolvent at r = −λ.

    Returns:
        The unique solution y.

    Raises:
        ValueError: If λ is not a finite positive number.
        DimensionMismatchError: If rhs has the wrong length.
        ProblemValidationError: If rhs has non-finite entries.
    """
    if not isinstance(lam, Real) or not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a finite positive number, got: {lam}")
    rhs = as_vector(rhs, name="rhs")
    if rhs.size != op.n_cols:
        raise DimensionMismatchError(
            f"regularized_solve expects rhs of length {op.n_cols}, got {rhs.size}"
        )

    system = op.gram + float(lam) * np.eye(op.n_cols)
    factor = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
    y = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    correction = scipy.linalg.cho_solve(factor, rhs - system @ y, check_finite=False)
    return y + correction


def distance_to_range(op: Operator, x0: Vector) -> float:
    """Return dist(x₀, range T) as the least-squares residual min‖Tz − x₀‖."""
    x0 = as_vector(x0, name="x0")
    if x0.size != op.n_rows:
        raise DimensionMismatchError(
            f"x0 must have length {op.n_rows}, got {x0.size}"
        )
    z, *_ = scipy.linalg.lstsq(op.matrix, x0)
    return float(np.linalg.norm(op.matrix @ z - x0))


@dataclass(frozen=True, eq=False)
class Problem:
    """The triple (T, x₀, ε) with 0 < ε < ‖x₀‖ and dist(x₀, range T) < ε.

    Construction validates every invariant, so a Problem in hand is always
    solvable.
    """

    op: Operator
    x0: Vector
    epsilon: float

    def __post_init__(self) -> None:
        x0 = as_vector(self.x0, name="x0")
        if x0.size != self.op.n_rows:
            raise DimensionMismatchError(
                f"x0 must have length {self.op.n_rows} (rows of matrix), got {x0.size}"
            )
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

        epsilon = self.epsilon
        if isinstance(epsilon, bool) or not isinstance(epsilon, Real) or not np.isfinite(epsilon):
            raise EpsilonOutOfRangeError(f"epsilon must be a finite number, got: {epsilon!r}")
        epsilon = float(epsilon)
        object.__setattr__(self, "epsilon", epsilon)

        x0_norm = self.x0_norm
        if not 0 < epsilon < x0_norm:
            raise EpsilonOutOfRangeError(
                f"epsilon={epsilon!r} must lie in ]0, ‖x0‖[ = ]0, {x0_norm!r}["
            )
        if not self.op.is_surjective:
            gap = distance_to_range(self.op, x0)
            if gap >= epsilon:
                raise InfeasibleError(
                    f"dist(x0, range T) = {gap!r} is not below epsilon={epsilon!r}"
                )

    @property
    def x0_norm(self) -> float:
        return float(np.linalg.norm(self.x0))

    def with_center(self, x0: Vector) -> "Problem":
        """Return the same operator and radius around a new center."""
        return replace(self, x0=x0)

    def with_epsilon(self, epsilon: float) -> "Problem":
        """Return the same operator and center with a new radius."""
        return replace(self, epsilon=epsilon)


def load_problem(source: str | bytes | Mapping) -> Problem:
    """Parse and validate a problem document.

    Args:
        source: JSON text, or an already-decoded mapping.

    Returns:
        A validated Problem.

    Raises:
        ProblemParseError: Malformed JSON, missing/unknown keys, bad entries.
        DimensionMismatchError: Ragged matrix or x0 of the wrong length.
        EpsilonOutOfRangeError: epsilon ≤ 0 or epsilon ≥ ‖x0‖.
        InfeasibleError: dist(x0, range T) ≥ epsilon.
    """
    if isinstance(source, Mapping):
        document = source
    else:
        try:
            document = json.loads(source)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ProblemParseError(f"Problem document is not valid JSON: {e}") from None
    if not isinstance(document, Mapping):
        raise ProblemParseError("Problem document must be a JSON object")

    missing = {"matrix", "x0", "epsilon"} - set(document)
    if missing:
        raise ProblemParseError(f"Missing field(s): {', '.join(sorted(missing))}")
    unknown = set(document) - _DOCUMENT_KEYS
    if unknown:
        raise ProblemParseError(f"Unknown field(s): {', '.join(sorted(unknown))}")

    field = document.get("field", "real")
    if field not in FIELDS:
        raise ProblemParseError(f"field must be 'real' or 'complex', got: {field!r}")
    is_complex = field == "complex"

    matrix = _parse_matrix(document["matrix"], is_complex)
    x0 = _parse_vector(document["x0"], is_complex, name="x0")

    epsilon = document["epsilon"]
    if isinstance(epsilon, bool) or not isinstance(epsilon, Real):
        raise ProblemParseError(f"epsilon must be a number, got: {epsilon!r}")
    if not np.isfinite(epsilon):
        raise ProblemParseError(f"epsilon must be finite, got: {epsilon!r}")

    return Problem(Operator(matrix), x0, float(epsilon))


def load_problem_file(path: Path | str) -> Problem:
    """Read and validate a problem document from disk.

    Raises:
        FileNotFoundError: If the file does not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Problem file not found: {path}")
    problem = load_problem(path.read_text())
    logger.debug(f"Loaded {problem.op.n_rows}x{problem.op.n_cols} problem from {path}")
    return problem


def dump_problem(problem: Problem) -> str:
    """Serialize a problem as a document that load_problem accepts."""
    document = {
        "field": problem.op.field,
        "matrix": problem.op.matrix,
        "x0": problem.x0,
        "epsilon": problem.epsilon,
    }
    return render_json(document)


def _parse_scalar(entry, is_complex: bool, where: str) -> complex | float:
    if is_complex:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ProblemParseError(f"{where}: complex entries must be [re, im] pairs, got {entry!r}")
        re, im = (_parse_scalar(part, False, where) for part in entry)
        return complex(re, im)
    if isinstance(entry, bool) or not isinstance(entry, Real):
        raise ProblemParseError(f"{where}: expected a number, got {entry!r}")
    if not np.isfinite(entry):
        raise ProblemParseError(f"{where}: entries must be finite, got {entry!r}")
    return float(entry)


def _parse_vector(values, is_complex: bool, name: str) -> np.ndarray:
    if not isinstance(values, (list, tuple)) or not values:
        raise ProblemParseError(f"{name} must be a non-empty array")
    entries = [_parse_scalar(v, is_complex, f"{name}[{i}]") for i, v in enumerate(values)]
    return np.array(entries, dtype=np.complex128 if is_complex else np.float64)


def _parse_matrix(rows, is_complex: bool) -> np.ndarray:
    if not isinstance(rows, (list, tuple)) or not rows:
        raise ProblemParseError("matrix must be a non-empty array of rows")
    parsed = [_parse_vector(row, is_complex, f"matrix[{i}]") for i, row in enumerate(rows)]
    widths = {row.size for row in parsed}
    if len(widths) != 1:
        raise DimensionMismatchError(f"matrix rows have differing lengths: {sorted(widths)}")
    return np.vstack(parsed)
