"""Exact solution of a single arm's penalized MDP."""
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ucwhittle.config import MAX_SWEEPS, SOLVER_TOL
from ucwhittle.core.kernel import PenalizedSolution, RewardTable, TransitionKernel
from ucwhittle.exceptions import ConvergenceError
from ucwhittle.monitoring.metrics import mdp_solves_total

# Actions whose q-values are this close count as tied
TIE_TOL = 1e-12

METHODS = ("policy_iteration", "value_iteration")

_solve_counters = {method: mdp_solves_total.labels(method=method) for method in METHODS}


def _check_scalars(penalty: float, gamma: float, tol: Optional[float] = None) -> None:
    if not math.isfinite(penalty):
        raise ValueError(f"penalty must be finite, got {penalty}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if tol is not None and not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")


def bellman_backup(
    probs: np.ndarray, rewards: np.ndarray, penalty: float, gamma: float, v: np.ndarray
) -> np.ndarray:
    """One penalized Bellman backup: q(s,a) = R(s,a) - penalty*a + gamma * P(s,a,.) @ v."""
    costs = penalty * np.arange(probs.shape[1])
    return rewards - costs + gamma * (probs @ v)


def greedy_policy(q: np.ndarray) -> np.ndarray:
    """Greedy actions, preferring the lowest action among ties."""
    best = q.max(axis=1, keepdims=True)
    return np.argmax(q >= best - TIE_TOL, axis=1)


def _policy_values(
    probs: np.ndarray, rewards: np.ndarray, penalty: float, gamma: float, policy: np.ndarray
) -> np.ndarray:
    states = np.arange(probs.shape[0])
    p_pi = probs[states, policy]
    r_pi = rewards[states, policy] - penalty * policy
    return np.linalg.solve(np.eye(len(states)) - gamma * p_pi, r_pi)


def _policy_iteration(probs, rewards, penalty, gamma, tol, warm_v, max_iter):
    if warm_v is None:
        policy = greedy_policy(rewards - penalty * np.arange(probs.shape[1]))
    else:
        policy = greedy_policy(bellman_backup(probs, rewards, penalty, gamma, warm_v))

    for iteration in range(1, max_iter + 1):
        v = _policy_values(probs, rewards, penalty, gamma, policy)
        q = bellman_backup(probs, rewards, penalty, gamma, v)
        current = q[np.arange(len(policy)), policy]
        # Switch only on strict improvement so policy iteration cannot cycle on ties
        improved = q.max(axis=1) > current + TIE_TOL
        if not improved.any():
            residual = float(np.max(np.abs(q.max(axis=1) - v)))
            if residual > tol:
                raise ConvergenceError(residual, iteration)
            return q.max(axis=1), q, greedy_policy(q), iteration
        policy = np.where(improved, np.argmax(q, axis=1), policy)

    raise ConvergenceError(float("nan"), max_iter, "policy iteration did not stabilize")


def _value_iteration(probs, rewards, penalty, gamma, tol, warm_v, max_iter):
    v = np.zeros(probs.shape[0]) if warm_v is None else np.array(warm_v, dtype=float)
    threshold = tol * (1.0 - gamma) / gamma
    residual = float("inf")
    for iteration in range(1, max_iter + 1):
        q = bellman_backup(probs, rewards, penalty, gamma, v)
        v_next = q.max(axis=1)
        residual = float(np.max(np.abs(v_next - v)))
        v = v_next
        if residual <= threshold:
            return v, q, greedy_policy(q), iteration
    raise ConvergenceError(residual, max_iter)


def solve_arrays(
    probs: np.ndarray,
    rewards: np.ndarray,
    penalty: float,
    gamma: float,
    tol: float = SOLVER_TOL,
    method: str = "policy_iteration",
    warm_v: Optional[np.ndarray] = None,
    max_iter: int = MAX_SWEEPS,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Array-level solver behind ``solve_penalized_mdp``; skips model validation.

    Returns:
        (v, q, policy, iterations)
    """
    if method == "policy_iteration":
        solver = _policy_iteration
    elif method == "value_iteration":
        solver = _value_iteration
    else:
        raise ValueError(f"unknown solver method '{method}'; choose from {METHODS}")
    _solve_counters[method].inc()
    return solver(probs, rewards, penalty, gamma, tol, warm_v, max_iter)


def solve_penalized_mdp(
    kernel: TransitionKernel,
    rewards: RewardTable,
    penalty: float,
    gamma: float,
    tol: float = SOLVER_TOL,
    method: str = "policy_iteration",
    warm_start: Optional[Union[PenalizedSolution, np.ndarray]] = None,
    max_iter: int = MAX_SWEEPS,
) -> PenalizedSolution:
    """Solve the Bellman equation with a per-unit action penalty.

    Policy iteration evaluates each policy exactly, so its fixed point is exact
    up to floating point; value iteration sweeps until the residual bounds the
    distance to the fixed point by ``tol``.

    Args:
        kernel: Arm transition probabilities.
        rewards: Known rewards.
        penalty: Cost subtracted from action 1 (``penalty * a`` in general).
        gamma: Discount in (0, 1).
        tol: Sup-norm tolerance on the fixed point.
        method: ``policy_iteration`` or ``value_iteration``.
        warm_start: Previous solution or value vector to start from.
        max_iter: Iteration cap.

    Returns:
        The penalized solution; the policy breaks ties toward action 0.

    Raises:
        ValueError: on non-finite inputs or gamma outside (0, 1).
        ConvergenceError: when the cap is reached before ``tol``.
    """
    _check_scalars(penalty, gamma, tol)
    if rewards.values.shape != kernel.probs.shape[:2]:
        raise ValueError(
            f"reward shape {rewards.values.shape} does not match kernel {kernel.probs.shape[:2]}"
        )
    warm_v = warm_start.v if isinstance(warm_start, PenalizedSolution) else warm_start
    v, q, policy, iterations = solve_arrays(
        kernel.probs, rewards.values, penalty, gamma, tol, method, warm_v, max_iter
    )
    return PenalizedSolution(
        v=v, q=q, policy=policy, penalty=penalty, gamma=gamma, iterations=iterations
    )


def evaluate_policy(
    kernel: TransitionKernel,
    rewards: RewardTable,
    policy: Sequence[int],
    penalty: float,
    gamma: float,
) -> np.ndarray:
    """Value of a fixed deterministic policy under the penalized reward.

    Raises:
        ValueError: if the policy is malformed or the inputs are non-finite.
    """
    _check_scalars(penalty, gamma)
    policy = np.asarray(policy)
    if policy.shape != (kernel.num_states,):
        raise ValueError(f"policy must assign one action to each of {kernel.num_states} states")
    if not np.issubdtype(policy.dtype, np.integer):
        raise ValueError("policy actions must be integers")
    if np.any(policy < 0) or np.any(policy >= kernel.num_actions):
        raise ValueError("policy uses an illegal action")
    return _policy_values(kernel.probs, rewards.values, penalty, gamma, policy)


def lagrangian_value(
    values: Sequence[np.ndarray],
    initial_states: Sequence[int],
    penalty: float,
    budget: int,
    gamma: float,
) -> float:
    """Sum of per-arm penalized values plus the constant penalty * K / (1 - gamma)."""
    _check_scalars(penalty, gamma)
    if len(values) != len(initial_states):
        raise ValueError("need exactly one value array per arm")
    total = sum(float(v[s]) for v, s in zip(values, initial_states))
    return total + penalty * budget / (1.0 - gamma)
