"""Tests for the penalized-MDP solver."""
import numpy as np
import pytest

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.core.solver import (
    bellman_backup,
    evaluate_policy,
    lagrangian_value,
    solve_penalized_mdp,
)
from ucwhittle.exceptions import ConvergenceError


def reference_values(kernel, rewards, penalty, gamma, sweeps=500):
    """Plain Bellman recursion run long past convergence."""
    v = np.zeros(kernel.num_states)
    for _ in range(sweeps):
        q = bellman_backup(kernel.probs, rewards.values, penalty, gamma, v)
        v = q.max(axis=1)
    return v, bellman_backup(kernel.probs, rewards.values, penalty, gamma, v)


class TestSolvePenalizedMdp:
    """Test cases for solve_penalized_mdp."""

    def setup_method(self):
        """Set up test cases."""
        self.rewards = RewardTable.binary()
        self.rng = np.random.default_rng(11)

    def test_identical_actions_are_tied(self):
        """Pulling equals not pulling when actions are indistinguishable."""
        kernel = TransitionKernel.from_good_probs(0.3, 0.3, 0.7, 0.7)
        solution = solve_penalized_mdp(kernel, self.rewards, 0.0, 0.9)
        np.testing.assert_allclose(solution.q[:, 0], solution.q[:, 1], atol=1e-12)
        np.testing.assert_array_equal(solution.policy, [0, 0])

    def test_large_penalty_never_pulls(self):
        """A penalty of 2 V_max makes passivity optimal everywhere."""
        for _ in range(20):
            good = np.sort(self.rng.uniform(size=(2, 2)), axis=1)
            kernel = TransitionKernel.from_good_probs(good[0, 0], good[0, 1], good[1, 0], good[1, 1])
            solution = solve_penalized_mdp(kernel, self.rewards, 2 * self.rewards.v_max(0.9), 0.9)
            np.testing.assert_array_equal(solution.policy, [0, 0])

    @pytest.mark.parametrize("method", ["policy_iteration", "value_iteration"])
    def test_matches_reference_recursion(self, method):
        """Fixed point agrees with a long plain recursion."""
        kernel = TransitionKernel.from_good_probs(0.1, 0.9, 0.1, 0.9)
        solution = solve_penalized_mdp(kernel, self.rewards, 0.3, 0.9, method=method)
        v_ref, q_ref = reference_values(kernel, self.rewards, 0.3, 0.9)
        np.testing.assert_allclose(solution.v, v_ref, atol=1e-8)
        np.testing.assert_allclose(solution.q, q_ref, atol=1e-8)

    def test_bellman_invariants(self, kernel_factory):
        """v = max q and q satisfies the penalized backup."""
        for _ in range(20):
            kernel = kernel_factory(self.rng)
            penalty = float(self.rng.uniform(-1.0, 1.0))
            solution = solve_penalized_mdp(kernel, self.rewards, penalty, 0.9)
            np.testing.assert_allclose(solution.v, solution.q.max(axis=1), atol=1e-9)
            backup = bellman_backup(kernel.probs, self.rewards.values, penalty, 0.9, solution.v)
            np.testing.assert_allclose(solution.q, backup, atol=1e-9)
            bound = self.rewards.v_max(0.9) + abs(penalty) / (1 - 0.9)
            assert np.all(np.abs(solution.v) <= bound + 1e-9)

    def test_value_iteration_contracts(self, kernel_factory):
        """Each sweep shrinks the sup-norm residual by at least gamma."""
        kernel = kernel_factory(self.rng)
        v = np.zeros(2)
        residuals = []
        for _ in range(50):
            v_next = bellman_backup(kernel.probs, self.rewards.values, 0.2, 0.9, v).max(axis=1)
            residuals.append(np.max(np.abs(v_next - v)))
            v = v_next
        for before, after in zip(residuals, residuals[1:]):
            assert after <= 0.9 * before + 1e-12

    def test_gap_nonincreasing_in_penalty(self, kernel_factory):
        """Q(s,1) - Q(s,0) never rises as the penalty grows."""
        penalties = np.linspace(-11.0, 11.0, 89)
        for _ in range(30):
            kernel = kernel_factory(self.rng)
            solutions = [solve_penalized_mdp(kernel, self.rewards, m, 0.9) for m in penalties]
            gaps = np.array([[solution.gap(0), solution.gap(1)] for solution in solutions])
            assert np.all(np.diff(gaps, axis=0) <= 1e-7)

    def test_warm_start_reaches_same_fixed_point(self, kernel_factory):
        """Warm starts change the path, not the answer."""
        kernel = kernel_factory(self.rng)
        cold = solve_penalized_mdp(kernel, self.rewards, 0.4, 0.9)
        warm = solve_penalized_mdp(kernel, self.rewards, 0.4, 0.9, warm_start=cold)
        np.testing.assert_allclose(warm.v, cold.v, atol=1e-12)

    def test_iteration_cap(self, kernel_factory):
        """Hitting the sweep cap reports the residual."""
        kernel = kernel_factory(self.rng)
        with pytest.raises(ConvergenceError) as exc:
            solve_penalized_mdp(kernel, self.rewards, 0.0, 0.9, method="value_iteration", max_iter=2)
        assert exc.value.iterations == 2
        assert exc.value.residual > 0

    def test_rejects_bad_inputs(self):
        """Invalid discount, penalty, tolerance or method are refused."""
        kernel = TransitionKernel.from_good_probs(0.2, 0.5, 0.6, 0.9)
        with pytest.raises(ValueError):
            solve_penalized_mdp(kernel, self.rewards, 0.0, 1.0)
        with pytest.raises(ValueError):
            solve_penalized_mdp(kernel, self.rewards, float("nan"), 0.9)
        with pytest.raises(ValueError):
            solve_penalized_mdp(kernel, self.rewards, 0.0, 0.9, tol=0.0)
        with pytest.raises(ValueError):
            solve_penalized_mdp(kernel, self.rewards, 0.0, 0.9, method="simplex")


class TestEvaluatePolicy:
    """Test cases for evaluate_policy."""

    def setup_method(self):
        """Set up test cases."""
        self.rewards = RewardTable.binary()

    def test_zero_rewards(self):
        """No reward and no pulls give zero value."""
        kernel = TransitionKernel.from_good_probs(0.2, 0.5, 0.6, 0.9)
        zero = RewardTable(values=np.zeros((2, 2)))
        np.testing.assert_allclose(evaluate_policy(kernel, zero, [0, 0], 0.5, 0.9), [0.0, 0.0])

    def test_absorbing_good_state(self):
        """An absorbing paying state is worth 1 / (1 - gamma)."""
        kernel = TransitionKernel.from_good_probs(0.0, 0.0, 1.0, 1.0)
        values = evaluate_policy(kernel, self.rewards, [0, 0], 0.0, 0.9)
        assert values[1] == pytest.approx(10.0)
        assert values[0] == pytest.approx(0.0)

    def test_greedy_policy_matches_solver(self, kernel_factory):
        """Evaluating the greedy policy reproduces the optimal values."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            kernel = kernel_factory(rng)
            penalty = float(rng.uniform(0.0, 1.0))
            solution = solve_penalized_mdp(kernel, self.rewards, penalty, 0.9)
            values = evaluate_policy(kernel, self.rewards, solution.policy, penalty, 0.9)
            np.testing.assert_allclose(values, solution.v, atol=2e-9)

    def test_rejects_malformed_policy(self):
        """Policies must give one legal integer action per state."""
        kernel = TransitionKernel.from_good_probs(0.2, 0.5, 0.6, 0.9)
        with pytest.raises(ValueError):
            evaluate_policy(kernel, self.rewards, [0], 0.0, 0.9)
        with pytest.raises(ValueError):
            evaluate_policy(kernel, self.rewards, [0, 2], 0.0, 0.9)
        with pytest.raises(ValueError):
            evaluate_policy(kernel, self.rewards, [0.0, 1.0], 0.0, 0.9)


class TestLagrangianValue:
    """Test cases for lagrangian_value."""

    def test_zero(self):
        """Zero values and penalty sum to zero."""
        assert lagrangian_value([np.zeros(2), np.zeros(2)], [0, 1], 0.0, 1, 0.9) == 0.0

    def test_direct_formula(self):
        """Per-arm values plus the constant penalty term."""
        values = [np.array([3.0, 0.0]), np.array([0.0, 4.0])]
        assert lagrangian_value(values, [0, 1], 0.5, 1, 0.9) == pytest.approx(12.0)

    def test_matches_rollouts(self):
        """Agrees with a Monte Carlo estimate of the penalized return."""
        rng = np.random.default_rng(5)
        rewards = RewardTable.binary()
        kernels = [
            TransitionKernel.from_good_probs(0.2, 0.6, 0.5, 0.9),
            TransitionKernel.from_good_probs(0.1, 0.3, 0.7, 0.8),
        ]
        policies = [np.array([1, 0]), np.array([1, 1])]
        initial = [0, 1]
        penalty, budget, gamma = 0.3, 1, 0.9
        exact = lagrangian_value(
            [evaluate_policy(k, rewards, p, penalty, gamma) for k, p in zip(kernels, policies)],
            initial, penalty, budget, gamma,
        )

        rollouts, steps = 20_000, 150
        total = np.zeros(rollouts)
        for kernel, policy, s0 in zip(kernels, policies, initial):
            states = np.full(rollouts, s0)
            for h in range(steps):
                actions = policy[states]
                total += gamma ** h * (rewards.values[states, actions] - penalty * actions)
                p_good = kernel.probs[states, actions, 1]
                states = (rng.random(rollouts) < p_good).astype(int)
        estimate = total.mean() + penalty * budget / (1 - gamma)
        assert estimate == pytest.approx(exact, abs=0.1)

    def test_rejects_mismatched_arms(self):
        """One value array per arm is required."""
        with pytest.raises(ValueError):
            lagrangian_value([np.zeros(2)], [0, 1], 0.0, 1, 0.9)
