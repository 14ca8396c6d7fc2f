import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from col_lab import problems_il as il
from col_lab import problems_synthetic as ps
from col_lab.equilibrium import (
    check_ep_solution,
    ep_values,
    equilibrium_step,
    monotonicity_certificate,
    natural_residual,
    solve_equilibrium,
    solve_vi,
)
from col_lab.errors import DomainError, NonConvergenceError, UnsupportedError
from col_lab.geometry import DecisionSet
from col_lab.verification import small_instances

from oracles import quadratic_fixed_point


class TestNaturalResidual:
    def test_solution(self):
        q0 = ps.q0()
        assert natural_residual(q0.decision_set, q0.operator, np.zeros(2)) == 0.0

    def test_corner(self):
        q0 = ps.q0()
        r = natural_residual(q0.decision_set, q0.operator, np.array([1.0, 1.0]))
        assert r == pytest.approx(np.sqrt(0.5), rel=1e-15)

    def test_interior_zero_operator(self):
        dset = DecisionSet.ball([0, 0], 1)
        assert natural_residual(dset, lambda x: np.zeros(2), np.array([0.3, 0.2])) == 0.0


class TestSolveVI:
    def test_q0(self):
        sol = solve_equilibrium(ps.q0(), 1e-10)
        assert np.linalg.norm(sol.x_star) <= 1e-9
        assert sol.natural_residual <= 1e-10

    def test_q1(self):
        sol = solve_equilibrium(ps.q1(), 1e-10)
        np.testing.assert_allclose(sol.x_star, quadratic_fixed_point(0.5 * np.eye(2), [0.2, 0.2]), atol=1e-9)
        np.testing.assert_allclose(sol.x_star, [0.4, 0.4], atol=1e-9)

    def test_simplex_instance(self):
        # x* = P(0.5 x* + b) on the simplex; interior solution (0.7, 0.3)
        np.testing.assert_allclose(solve_equilibrium(ps.q_simplex()).x_star, [0.7, 0.3], atol=1e-9)

    def test_query_independent(self):
        # A = 0: x* is the projection of b
        p = ps.make_quadratic(np.zeros((2, 2)), np.array([0.3, -2.0]), 1.0, ps.unit_box())
        np.testing.assert_allclose(solve_equilibrium(p).x_star, [0.3, -1.0], atol=1e-9)

    def test_two_starts_agree(self):
        p, tol = ps.q1(), 1e-10
        a = solve_equilibrium(p, tol, x0=np.array([-1.0, -1.0])).x_star
        b = solve_equilibrium(p, tol, x0=np.array([1.0, -1.0])).x_star
        assert np.linalg.norm(a - b) <= 2 * tol

    def test_backtracking_without_step(self):
        q = ps.q1()
        sol = solve_vi(q.decision_set, q.operator, 1e-10)
        np.testing.assert_allclose(sol.x_star, [0.4, 0.4], atol=1e-9)

    def test_non_convergence_carries_best(self):
        q = ps.q1()
        with pytest.raises(NonConvergenceError) as info:
            solve_vi(q.decision_set, q.operator, 1e-14, max_iter=3, step=0.01, x0=np.array([1.0, 1.0]))
        assert info.value.best is not None and q.decision_set.contains(info.value.best)
        assert info.value.residual > 1e-14 and info.value.iterations == 3

    def test_bad_tolerance(self):
        q = ps.q1()
        with pytest.raises(DomainError):
            solve_vi(q.decision_set, q.operator, 0.0)

    def test_step_rule(self):
        assert equilibrium_step(ps.q0()) == pytest.approx(0.5 / 1.5 ** 2)
        flat = ps.make_quadratic(1.5 * np.eye(2), np.zeros(2), 1.0, ps.unit_box())
        assert equilibrium_step(flat) == pytest.approx(1 / (2 * 2.5))

    @pytest.mark.parametrize("seed", [1264, 268])
    def test_tight_tolerance_with_small_mu(self, seed):
        # mu ~ 0.015: the certified distance target sits at the rounding level
        # of the residual; the solver must still stop within the tolerance
        p = ps.random_quadratic(np.random.default_rng(seed))
        sol = solve_equilibrium(p, 1e-12, max_iter=200_000)
        assert sol.natural_residual <= 1e-12

    def test_stagnation_accept(self):
        p = ps.q1()
        sol = solve_vi(p.decision_set, p.operator, 1e-300, 100_000, step=0.3, accept=1e-8, patience=50)
        assert sol.natural_residual <= 1e-8
        assert sol.iterations < 100_000
        with pytest.raises(NonConvergenceError):
            solve_vi(p.decision_set, p.operator, 1e-300, 2000, step=0.3)

    @given(st.integers(0, 10_000))
    def test_closed_form_when_interior(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(3, 3))
        A *= rng.uniform(0.05, 0.9) / np.linalg.norm(A, 2)
        b = rng.uniform(-0.1, 0.1, 3)
        p = ps.make_quadratic(A, b, rng.uniform(0.5, 2), DecisionSet.box(-np.ones(3), np.ones(3)))
        closed = quadratic_fixed_point(A, b)
        if np.max(np.abs(closed)) >= 1:
            return
        tol = 1e-10
        assert np.linalg.norm(solve_equilibrium(p, tol).x_star - closed) <= 10 * tol


class TestEPCheck:
    def test_q0_solution(self):
        ok, worst = check_ep_solution(ps.q0(), np.zeros(2), 101)
        assert ok and worst >= -1e-6

    def test_q0_corner_fails(self):
        # Phi((1,1), (0.5,0.5)) = -0.25
        ok, worst = check_ep_solution(ps.q0(), np.array([1.0, 1.0]), 101)
        assert not ok and worst <= -0.2
        assert ep_values(ps.q0(), [1.0, 1.0], [[0.5, 0.5]])[0] == -0.25

    @given(st.integers(0, 1000))
    def test_phi_vanishes_on_diagonal(self, seed):
        p = ps.random_quadratic(seed)
        x = p.decision_set.sample(np.random.default_rng(seed))
        assert ep_values(p, x, [x])[0] == 0.0

    def test_dimension_limit(self):
        p = ps.make_quadratic(0.5 * np.eye(4), np.zeros(4), 1.0, DecisionSet.box(-np.ones(4), np.ones(4)))
        with pytest.raises(UnsupportedError):
            check_ep_solution(p, np.zeros(4))

    @pytest.mark.parametrize("p", small_instances(), ids=lambda p: p.name)
    def test_vi_solution_solves_ep(self, p):
        ok, worst = check_ep_solution(p, solve_equilibrium(p).x_star, 101)
        assert ok and worst >= -1e-6


class TestMonotonicity:
    def test_q0_exact(self):
        ratios = monotonicity_certificate(ps.q0(), 1000, rng=0, return_ratios=True)
        np.testing.assert_allclose(ratios, 0.5, atol=1e-12)

    def test_negative_a(self):
        p = ps.make_quadratic(-0.5 * np.eye(2), np.zeros(2), 1.0, ps.unit_box())
        assert p.mu == pytest.approx(0.5)
        np.testing.assert_allclose(monotonicity_certificate(p, 500, rng=0, return_ratios=True), 1.5, atol=1e-12)

    def test_il_certified(self):
        p = il.chain_instance()
        assert monotonicity_certificate(p, 2000, rng=0) >= p.alpha - p.beta - 1e-8

    @given(st.integers(0, 10_000))
    def test_prop1_lower_bound(self, seed):
        p = ps.random_quadratic(seed)
        assert monotonicity_certificate(p, 300, rng=seed) >= p.alpha - p.beta - 1e-8

    def test_rejects_zero_pairs(self):
        with pytest.raises(DomainError):
            monotonicity_certificate(ps.q0(), 0)
