import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from col_lab import problems_il as il
from col_lab.core import FeedbackOracle, certify_beta, gradient_check
from col_lab.equilibrium import monotonicity_certificate, solve_equilibrium
from col_lab.errors import ConfigurationError, DomainError
from col_lab.regret import per_round_minimizer
from col_lab.verification import contraction_margin, mc_distribution_z, self_consistent_policy

from oracles import state_distribution_enumerated


def swap_chain(d1=(1.0, 0.0), T=2):
    """Deterministic chain: action 0 stays, action 1 swaps."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = P[1, 0, 1] = 1.0
    P[0, 1, 1] = P[1, 1, 0] = 1.0
    return il.TabularMDP(P, np.array(d1), T)


def random_mdp(seed, S=3, A=2, T=4):
    rng = np.random.default_rng(seed)
    return il.TabularMDP(rng.dirichlet(np.ones(S), size=(S, A)), rng.dirichlet(np.ones(S)), T)


class TestStateDistribution:
    def test_single_step_is_initial(self):
        mdp = random_mdp(0, T=1)
        pi = np.random.default_rng(1).dirichlet(np.ones(2), size=3)
        np.testing.assert_array_equal(il.state_distribution(mdp, pi), mdp.d1)

    def test_self_loop(self):
        p = il.self_loop_instance()
        for pi in np.random.default_rng(0).dirichlet(np.ones(2), size=(20, 2)):
            np.testing.assert_array_equal(p.distribution(pi), [0.5, 0.5])

    def test_swap_chain(self):
        # d1 = (1, 0), always swap: ((1,0) + (0,1)) / 2
        d = il.state_distribution(swap_chain(), np.array([[0.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_array_equal(d, [0.5, 0.5])

    @given(st.integers(0, 10_000), st.integers(1, 5))
    def test_matches_trajectory_enumeration(self, seed, T):
        mdp = random_mdp(seed, T=T)
        pi = np.random.default_rng(seed + 1).dirichlet(np.ones(2), size=3)
        ref = state_distribution_enumerated(mdp.P, pi, mdp.d1, T)
        d = il.state_distribution(mdp, pi)
        np.testing.assert_allclose(d, ref, atol=1e-13)
        assert abs(d.sum() - 1) <= 1e-10

    def test_monte_carlo(self):
        mdp = random_mdp(4, S=4, T=6)
        pi = np.random.default_rng(2).dirichlet(np.ones(2), size=4)
        assert mc_distribution_z(mdp, pi, 100_000, np.random.default_rng(7)) <= 3.0


class TestMDPValidation:
    def test_rows_must_sum_to_one(self):
        P = np.full((2, 2, 2), 0.6)
        with pytest.raises(DomainError):
            il.TabularMDP(P, np.array([0.5, 0.5]), 2)

    def test_zero_initial_mass_rejected_for_il(self):
        with pytest.raises(DomainError):
            il.ILProblem(swap_chain(), il.deterministic_expert(2, 2))

    def test_expert_rows(self):
        with pytest.raises(DomainError):
            il.ILProblem(swap_chain((0.5, 0.5)), np.ones((2, 2)))


class TestLoss:
    def test_expert_has_zero_loss(self):
        p = il.chain_instance(eps=0.0)
        loss, g = p.loss_and_grad(np.full(4, 0.5), p.expert_flat)
        assert loss == 0.0
        np.testing.assert_array_equal(g, 0.0)

    def test_self_loop_uniform(self):
        # per state 1/2 ||(.5,.5) - (1,0)||^2 = 0.25, weighted by d = (0.5, 0.5)
        p = il.self_loop_instance(eps=0.0)
        u = np.full(4, 0.5)
        assert p.loss(u, u) == pytest.approx(0.25, abs=1e-16)
        assert il.il_loss(p, u, u)[0] == p.loss(u, u)

    @pytest.mark.parametrize("factory", [il.chain_instance, il.self_loop_instance,
                                         lambda: il.random_instance(3, num_states=4, num_actions=3)])
    def test_gradient_consistency(self, factory):
        assert gradient_check(factory(), 20, 1e-5, rng=1) < 1e-5

    @given(st.integers(0, 10_000))
    def test_strong_convexity_in_decision(self, seed):
        # Hessian in the decision argument is diag(d^q) (x) I
        p = il.random_instance(seed)
        rng = np.random.default_rng(seed)
        q, a, b = p.decision_set.sample(rng, 3)
        diff = a - b
        ratio = np.dot(p.grad(q, a) - p.grad(q, b), diff) / np.dot(diff, diff)
        assert ratio >= p.distribution(q).min() - 1e-12
        assert p.distribution(q).min() >= p.alpha - 1e-12
        assert p.distribution(q).max() <= p.smoothness + 1e-12


class TestConstants:
    def test_chain_constants(self):
        p = il.chain_instance()
        # alpha = (0.5 + 2 * 0.4) / 3, L = (0.5 + 2 * 0.6) / 3
        assert p.alpha == pytest.approx(1.3 / 3, rel=1e-14)
        assert p.smoothness == pytest.approx(1.7 / 3, rel=1e-14)
        assert p.beta_is_estimate and p.beta == pytest.approx(1.5 * p.beta_raw)
        assert p.alpha > p.beta > 0

    def test_beta_trivial_cases(self):
        assert il.self_loop_instance().beta == 0.0
        mdp = random_mdp(3, T=1)
        assert il.estimate_beta(il.ILProblem(mdp, il.deterministic_expert(3, 2), 0.1), 500, rng=0) == 0.0

    def test_short_chain_beta_positive(self):
        p = il.chain_instance(horizon=2)
        assert 0 < p.beta < np.inf
        assert p.beta <= 1.5 * il.beta_upper_bound(p)

    def test_explicit_beta(self):
        p = il.ILProblem(il.chain_instance().mdp, il.deterministic_expert(2, 2), 0.1, beta=0.05)
        assert p.beta == 0.05 and not p.beta_is_estimate

    def test_sampled_beta_is_lower_estimate(self):
        p = il.chain_instance()
        assert certify_beta(p, 2000, rng=3) <= p.beta

    def test_monotone_with_certified_margin(self):
        for p in (il.chain_instance(), il.self_loop_instance(), il.random_instance(5)):
            assert monotonicity_certificate(p, 2000, rng=0) >= p.alpha - p.beta - 1e-8


class TestMinimizers:
    def test_floor_minimizer(self):
        p = il.chain_instance(eps=0.1)
        np.testing.assert_allclose(per_round_minimizer(p, p.decision_set.midpoint()),
                                   [0.9, 0.1, 0.9, 0.1], atol=1e-15)

    def test_self_consistent_policy(self):
        p = il.chain_instance()
        pi_hat, spread, fixed = self_consistent_policy(p)
        assert spread <= 1e-6 and fixed <= 1e-8
        np.testing.assert_allclose(pi_hat, p.projected_expert(), atol=1e-12)

    def test_self_loop_solution_is_projected_expert(self):
        p = il.self_loop_instance()
        np.testing.assert_allclose(solve_equilibrium(p).x_star, p.projected_expert(), atol=1e-10)

    def test_linear_convergence(self):
        margin, eta, rho = contraction_margin(il.chain_instance(), np.array([0.1, 0.9, 0.1, 0.9]))
        assert margin <= 0.0 and rho < 1


class TestRollouts:
    def test_single_step_gradient_on_one_block(self):
        mdp = random_mdp(8, T=1)
        p = il.ILProblem(mdp, il.deterministic_expert(3, 2), 0.1, beta=0.0)
        rng = np.random.default_rng(0)
        x = p.decision_set.midpoint()
        for _ in range(20):
            g = il.rollout_feedback(p, x, rng).reshape(3, 2)
            assert np.count_nonzero(np.any(g != 0, axis=1)) == 1

    def test_unbiased(self):
        p = il.chain_instance()
        x = np.array([0.3, 0.7, 0.8, 0.2])
        rng = np.random.default_rng(5)
        n = 100_000
        draws = np.array([p.sample_gradient(x, rng) for _ in range(n)])
        se = draws.std(axis=0, ddof=1) / np.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0) - p.operator(x)) <= 3 * se)

    def test_deterministic_dynamics_give_deterministic_feedback(self):
        p = il.ILProblem(swap_chain((0.5, 0.5), T=3), il.deterministic_expert(2, 2), 0.0, beta=0.0)
        x = np.array([0.0, 1.0, 0.0, 1.0])
        rng = np.random.default_rng(0)
        draws = {tuple(p.sample_gradient(x, rng)) for _ in range(50)}
        assert len(draws) == 2  # one per start state
        assert np.allclose(np.mean([p.sample_gradient(x, rng) for _ in range(4000)], axis=0),
                           p.operator(x), atol=0.02)

    def test_noise_variance_estimate(self):
        p = il.chain_instance()
        v = il.estimate_noise_variance(p, p.decision_set.midpoint(), rng=0, num_rollouts=1000)
        assert 0 < v < p.grad_bound ** 2 * 4

    def test_oracle_rollout_mode(self):
        p = il.chain_instance()
        orc = FeedbackOracle("rollout", rng_seed=3)
        x = p.decision_set.midpoint()
        assert orc.feedback(p, x).shape == (4,)


class TestMDPFiles:
    def test_round_trip(self, tmp_path):
        p = il.random_instance(2, num_states=3, num_actions=2, horizon=4)
        path = tmp_path / "m.mdp"
        path.write_text(il.format_mdp(p.mdp, p.expert, 0.05))
        mdp, expert, eps = il.load_mdp_file(path)
        np.testing.assert_array_equal(mdp.P, p.mdp.P)
        np.testing.assert_array_equal(mdp.d1, p.mdp.d1)
        np.testing.assert_array_equal(expert, p.expert)
        assert (mdp.horizon, eps) == (4, 0.05)

    @pytest.mark.parametrize("text", [
        "states 2\nactions 1\nhorizon 2\ninitial 1 0\ntransition 0 0 1 0\n",
        "states 2\nactions 1\nhorizon 2\ninitial 1 0\nbogus 1\n",
        "states x\n",
        "states 1\nactions 1\nhorizon 1\ninitial 1\ntransition 0 0 0.5\nexpert 0 1\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(ConfigurationError):
            il.parse_mdp_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            il.load_mdp_file(tmp_path / "nope.mdp")

    def test_comments_ignored(self):
        mdp, expert, eps = il.parse_mdp_text(
            "# header\nstates 1\nactions 2  # two\nhorizon 1\ninitial 1\n"
            "transition 0 0 1\ntransition 0 1 1\nexpert 0 0.5 0.5\n")
        assert eps is None and mdp.num_actions == 2
