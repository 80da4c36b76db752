"""Tests for the extremal vector solver and KKT verification."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_vectors.config import build_solver_config
from extremal_vectors.errors import (
    DimensionMismatchError,
    MaxIterationsExceededError,
    ProblemValidationError,
)
from extremal_vectors.operators import Operator, Problem
from extremal_vectors.solver import (
    discrepancy_for_multiplier,
    kkt_failures,
    kkt_verify,
    residual_at,
    secular_derivative,
    solve_extremal,
)
from problem_factory import random_problem, random_unitary


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture()
def identity_unit():
    """T = I₂, x₀ = (2, 0), ε = 1; extremal vector (1, 0) with r = −1."""
    return Problem(Operator.identity(2), np.array([2.0, 0.0]), 1.0)


@pytest.fixture()
def diagonal_problem():
    return Problem(Operator(np.diag([1.0, 2.0])), np.array([1.0, 1.0]), 0.5)


def _assert_kkt_suite(problem, result):
    kkt = result.kkt
    assert kkt.collinearity_residual <= 1e-8
    assert result.r < 0
    assert kkt.multiplier_sign_ok
    assert kkt.boundary_gap <= 1e-10 * max(problem.epsilon, 1.0)
    assert kkt.cap_slack >= -1e-8 * problem.x0_norm**2
    assert kkt.obtuse_pairing < 0


# ---------------------------------------------------------------------------
# Discrepancy function
# ---------------------------------------------------------------------------

class TestResidualAt:
    """Tests for residual_at and secular_derivative."""

    def test_identity_closed_form(self):
        y, phi = residual_at(Operator.identity(2), np.array([2.0, 0.0]), 1.0)
        np.testing.assert_allclose(y, [1.0, 0.0])
        assert phi == pytest.approx(1.0)

    def test_discrepancy_increases_with_lambda(self, diagonal_problem):
        lams = np.geomspace(1e-4, 1e4, 25)
        phis = [residual_at(diagonal_problem.op, diagonal_problem.x0, lam)[1] for lam in lams]
        assert np.all(np.diff(phis) > 0)
        assert phis[-1] < diagonal_problem.x0_norm

    @pytest.mark.parametrize("lam", [1e-2, 0.3, 5.0])
    def test_derivative_matches_central_difference(self, diagonal_problem, lam):
        op, x0 = diagonal_problem.op, diagonal_problem.x0
        step = 1e-5 * lam
        above = residual_at(op, x0, lam + step)[1] ** 2
        below = residual_at(op, x0, lam - step)[1] ** 2
        expected = (above - below) / (2 * step)
        derivative = secular_derivative(op, x0, lam)
        assert derivative > 0
        assert derivative == pytest.approx(expected, rel=1e-6)


class TestDiscrepancyForMultiplier:
    """Tests for the inverse map r ↦ ε."""

    def test_inverts_the_solver(self, diagonal_problem):
        result = solve_extremal(diagonal_problem)
        epsilon = discrepancy_for_multiplier(diagonal_problem.op, diagonal_problem.x0, result.r)
        assert epsilon == pytest.approx(diagonal_problem.epsilon, abs=1e-10)

    @pytest.mark.parametrize("r", [0.0, 1.0])
    def test_rejects_non_negative_multiplier(self, diagonal_problem, r):
        with pytest.raises(ValueError, match="must be negative"):
            discrepancy_for_multiplier(diagonal_problem.op, diagonal_problem.x0, r)


# ---------------------------------------------------------------------------
# solve_extremal
# ---------------------------------------------------------------------------

class TestSolveExtremal:
    """Tests for solve_extremal on fixed problems."""

    def test_identity_unit(self, identity_unit):
        result = solve_extremal(identity_unit)
        np.testing.assert_allclose(result.y, [1.0, 0.0], atol=1e-12)
        assert result.r == pytest.approx(-1.0, rel=1e-12)
        assert result.lam == pytest.approx(1.0, rel=1e-12)
        assert result.y_norm == pytest.approx(1.0)
        assert result.iterations >= 1

    def test_identity_counterexample_center(self):
        problem = Problem(Operator.identity(2), np.array([2.0, -2.0]), 1.0)
        result = solve_extremal(problem)
        assert result.y_norm == pytest.approx(2.0 * np.sqrt(2.0) - 1.0, rel=1e-12)

    def test_diagonal_problem(self, diagonal_problem):
        result = solve_extremal(diagonal_problem)
        _assert_kkt_suite(diagonal_problem, result)
        # y = (T*T + λI)⁻¹T*x₀ componentwise for a diagonal operator
        lam = result.lam
        np.testing.assert_allclose(result.y, [1.0 / (1.0 + lam), 2.0 / (4.0 + lam)], rtol=1e-12)

    def test_wide_operator(self):
        op = Operator(np.array([[1.0, 0.0, 1.0], [0.0, 2.0, -1.0]]))
        problem = Problem(op, np.array([3.0, 1.0]), 0.75)
        result = solve_extremal(problem)
        _assert_kkt_suite(problem, result)
        # The extremal vector lies in the range of T*
        coefficients, *_ = np.linalg.lstsq(op.matrix.T, result.y, rcond=None)
        np.testing.assert_allclose(op.matrix.T @ coefficients, result.y, atol=1e-12)

    def test_tall_operator_feasible(self):
        op = Operator(np.array([[1.0], [0.0]]))
        problem = Problem(op, np.array([2.0, 0.5]), 1.0)
        result = solve_extremal(problem)
        # Boundary of the ball meets the line through (1, 0) at y = 2 − √0.75
        assert result.y[0] == pytest.approx(2.0 - np.sqrt(0.75), rel=1e-10)
        assert result.kkt.boundary_gap <= 1e-10

    def test_complex_problem(self):
        op = Operator(np.array([[1.0, 1j], [-1j, 2.0]]))
        problem = Problem(op, np.array([1 + 1j, 2 - 1j]), 0.5)
        result = solve_extremal(problem)
        _assert_kkt_suite(problem, result)
        assert result.kkt.imag_leak <= 1e-10

    def test_lambda_init_gives_same_vector(self, diagonal_problem):
        default = solve_extremal(diagonal_problem)
        for lambda_init in (1e-6, 1e6):
            config = build_solver_config(lambda_init=lambda_init)
            result = solve_extremal(diagonal_problem, config)
            np.testing.assert_allclose(result.y, default.y, rtol=1e-9)

    def test_iteration_cap(self, diagonal_problem):
        config = build_solver_config(max_iterations=1)
        with pytest.raises(MaxIterationsExceededError, match="1 iterations"):
            solve_extremal(diagonal_problem, config)

    def test_to_dict_keys(self, identity_unit):
        record = solve_extremal(identity_unit).to_dict()
        assert list(record) == ["y", "y_norm", "r", "residual_norm", "iterations", "kkt"]
        assert record["kkt"]["multiplier_sign_ok"] is True


class TestIdentityFamily:
    """For T = I the extremal vector is (1 − ε/‖x₀‖)·x₀ with r = −ε/(‖x₀‖ − ε)."""

    @pytest.mark.parametrize("n", [2, 5, 20])
    @pytest.mark.parametrize("seed", range(5))
    def test_closed_form(self, n, seed):
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal(n)
        x0_norm = np.linalg.norm(x0)
        epsilon = rng.uniform(0.01, 0.99) * x0_norm
        result = solve_extremal(Problem(Operator.identity(n), x0, epsilon))
        np.testing.assert_allclose(result.y, (1.0 - epsilon / x0_norm) * x0, rtol=1e-10)
        assert result.r == pytest.approx(-epsilon / (x0_norm - epsilon), rel=1e-10)

    @given(
        n=st.sampled_from([2, 5, 20]),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        fraction=st.floats(min_value=0.01, max_value=0.99),
    )
    @settings(max_examples=50, deadline=None)
    def test_closed_form_property(self, n, seed, fraction):
        x0 = np.random.default_rng(seed).standard_normal(n)
        x0_norm = np.linalg.norm(x0)
        epsilon = fraction * x0_norm
        result = solve_extremal(Problem(Operator.identity(n), x0, epsilon))
        np.testing.assert_allclose(result.y, (1.0 - fraction) * x0, rtol=1e-10, atol=1e-14)
        assert result.r == pytest.approx(-epsilon / (x0_norm - epsilon), rel=1e-10)


class TestKktSuite:
    """Structural conditions on seeded random full-rank instances."""

    @pytest.mark.parametrize("seed", range(100))
    def test_random_instance(self, seed):
        problem = random_problem(seed, dims=(2, 8), cond=1e3)
        result = solve_extremal(problem)
        _assert_kkt_suite(problem, result)
        assert kkt_failures(result.kkt, problem.x0_norm, problem.epsilon) == []

    @pytest.mark.parametrize("seed", range(10))
    def test_random_complex_instance(self, seed):
        problem = random_problem(seed, dims=(2, 5), cond=1e2, complex_field=True)
        result = solve_extremal(problem)
        _assert_kkt_suite(problem, result)
        assert result.kkt.imag_leak <= 1e-8

    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_extremal_norm_below_feasible_points(self, seed):
        problem = random_problem(seed, dims=(2, 5), cond=1e2, square=True)
        result = solve_extremal(problem)
        # T⁻¹(x₀ + εw) is feasible for every unit w
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((problem.op.n_rows, 64))
        w /= np.linalg.norm(w, axis=0)
        feasible = np.linalg.solve(problem.op.matrix, problem.x0[:, None] + problem.epsilon * w)
        assert result.y_norm <= np.linalg.norm(feasible, axis=0).min() + 1e-9


class TestEquivariance:
    """Scaling and left-unitary invariance of the extremal vector."""

    @pytest.mark.parametrize("scale", [0.25, 3.0, 40.0])
    @pytest.mark.parametrize("seed", range(20))
    def test_positive_homogeneity(self, seed, scale):
        problem = random_problem(seed, dims=(2, 6), cond=1e2)
        base = solve_extremal(problem)
        scaled = solve_extremal(Problem(problem.op, scale * problem.x0, scale * problem.epsilon))
        gap = np.linalg.norm(scaled.y - scale * base.y)
        assert gap <= 1e-8 * scale * base.y_norm
        assert scaled.r == pytest.approx(base.r, rel=1e-8)

    @pytest.mark.parametrize("complex_field", [False, True])
    @pytest.mark.parametrize("seed", range(20))
    def test_left_unitary_invariance(self, seed, complex_field):
        problem = random_problem(seed, dims=(2, 6), cond=1e2, complex_field=complex_field)
        u = random_unitary(np.random.default_rng(seed + 1000), problem.op.n_rows, complex_field)
        rotated = Problem(Operator(u @ problem.op.matrix), u @ problem.x0, problem.epsilon)
        base = solve_extremal(problem)
        result = solve_extremal(rotated)
        assert np.linalg.norm(result.y - base.y) <= 1e-8 * base.y_norm
        assert result.r == pytest.approx(base.r, rel=1e-8)


# ---------------------------------------------------------------------------
# kkt_verify / kkt_failures
# ---------------------------------------------------------------------------

class TestKktVerify:
    """Tests for kkt_verify and kkt_failures on hand-built candidates."""

    def test_exact_extremal_vector(self, identity_unit):
        report = kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.array([1.0, 0.0]))
        assert report.collinearity_residual == 0.0
        assert report.multiplier == pytest.approx(-1.0)
        assert report.boundary_gap == pytest.approx(0.0)
        assert report.cap_slack == pytest.approx(2.0)
        assert report.obtuse_pairing == pytest.approx(-1.0)
        assert report.imag_leak == 0.0
        assert kkt_failures(report, 2.0, 1.0) == []

    def test_off_axis_candidate_fails_collinearity(self, identity_unit):
        report = kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.array([1.0, 0.5]))
        failures = kkt_failures(report, 2.0, 1.0)
        assert "collinearity" in failures
        assert "boundary" in failures

    def test_interior_candidate_fails_multiplier_sign(self, identity_unit):
        # Ty − x₀ = 0 gives a zero multiplier
        report = kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.array([2.0, 0.0]))
        assert not report.multiplier_sign_ok
        assert "multiplier_sign" in kkt_failures(report, 2.0, 1.0)

    def test_rejects_zero_vector(self, identity_unit):
        with pytest.raises(ProblemValidationError, match="nonzero"):
            kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.zeros(2))

    def test_rejects_wrong_length(self, identity_unit):
        with pytest.raises(DimensionMismatchError):
            kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.ones(3))

    def test_to_dict(self, identity_unit):
        report = kkt_verify(identity_unit.op, identity_unit.x0, 1.0, np.array([1.0, 0.0]))
        assert set(report.to_dict()) == {
            "collinearity_residual",
            "multiplier",
            "multiplier_sign_ok",
            "boundary_gap",
            "cap_slack",
            "obtuse_pairing",
            "imag_leak",
            "y_norm",
        }
