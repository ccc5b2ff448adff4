"""Optimistic planning over L1 confidence balls.

``solve_p_v`` finds the ball member with the highest future value by extended
value iteration. ``solve_p_m`` finds the highest Whittle index attainable in
the ball by bisection over the penalty, testing each penalty with an
alternating ascent on the action gap.
"""
from typing import NamedTuple, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ucwhittle.config import GAP_CHANGE_TOL, INDEX_WIDTH, MAX_ALTERNATIONS, MAX_SWEEPS, SOLVER_TOL
from ucwhittle.core.kernel import GOOD_STATE, PenalizedSolution, RewardTable, TransitionKernel
from ucwhittle.core.solver import bellman_backup, solve_arrays, solve_penalized_mdp
from ucwhittle.exceptions import ConvergenceError
from ucwhittle.learning.confidence import MAX_L1_RADIUS, ArmBall
from ucwhittle.monitoring.metrics import index_searches_total
from ucwhittle.planning.whittle import IndexMemoizer, bisect_index, search_interval, whittle_index

# Row rules for gap ascent outside the (state, a) rows
GAP_ROWS = ("optimistic", "sensitivity")

# Drained entries this small are float residue
DRAIN_TOL = 1e-12


class OptimisticSolution(BaseModel):
    """The optimistic kernel P† and its penalized solution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kernel: TransitionKernel
    solution: PenalizedSolution
    penalty_used: float
    sweeps: int = Field(0, ge=0, description="Extended value iteration sweeps")


class OptimisticIndex(NamedTuple):
    """Highest index found in a ball and the kernel attaining it."""

    index: float
    kernel: TransitionKernel
    pruned: bool = False


def optimistic_kernel(center: np.ndarray, radius: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Maximize p . values over each row's L1 ball intersected with the simplex.

    Moves up to radius/2 of mass onto the highest-value state, then drains the
    excess from the lowest-value states first.

    Args:
        center: Rows indexed (..., next_state).
        radius: L1 radius per row, shape ``center.shape[:-1]``.
        values: Per-next-state values.

    Returns:
        Array shaped like ``center``; zero-radius rows are returned unchanged.
    """
    num_states = center.shape[-1]
    rows = center.reshape(-1, num_states)
    r = np.minimum(np.asarray(radius, dtype=float).reshape(-1), MAX_L1_RADIUS)

    order = np.argsort(values, kind="stable")
    best = order[-1]
    p = rows.copy()
    p[:, best] = np.minimum(1.0, p[:, best] + r / 2.0)
    for idx in order:
        excess = p.sum(axis=1) - 1.0
        if not np.any(excess > 0.0):
            break
        drained = p[:, idx] - excess
        drained = np.where(drained > DRAIN_TOL, drained, 0.0)
        p[:, idx] = np.where(excess > 0.0, drained, p[:, idx])

    p = np.where(r[:, None] > 0.0, p, rows)
    return p.reshape(center.shape)


def pessimistic_kernel(center: np.ndarray, radius: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Minimize p . values over each row's L1 ball intersected with the simplex."""
    return optimistic_kernel(center, radius, -np.asarray(values, dtype=float))


def l1_optimistic_row(center_row, radius: float, values) -> np.ndarray:
    """Single-row form of ``optimistic_kernel``."""
    center_row = np.asarray(center_row, dtype=float)
    return optimistic_kernel(center_row[None, :], np.array([radius]), np.asarray(values, dtype=float))[0]


def l1_pessimistic_row(center_row, radius: float, values) -> np.ndarray:
    """Single-row form of ``pessimistic_kernel``."""
    center_row = np.asarray(center_row, dtype=float)
    return pessimistic_kernel(center_row[None, :], np.array([radius]), np.asarray(values, dtype=float))[0]


def _as_kernel(probs: np.ndarray) -> TransitionKernel:
    # Clip float noise from the draining step before validation
    probs = np.clip(probs, 0.0, 1.0)
    return TransitionKernel(probs=probs)


def solve_p_v(
    ball: ArmBall,
    rewards: RewardTable,
    penalty: float,
    gamma: float,
    tol: float = SOLVER_TOL,
    max_iter: int = MAX_SWEEPS,
) -> OptimisticSolution:
    """Highest-value kernel in the ball at a fixed penalty.

    Runs value iteration whose backup picks the optimistic row for every
    (s, a); the fixed point dominates the value of every ball member at every
    state. The kernel read off at convergence is then solved exactly.

    Raises:
        ConvergenceError: if extended value iteration hits ``max_iter``.
    """
    center, radius = ball.center.probs, ball.effective_radius
    values = rewards.values
    v = np.zeros(center.shape[0])
    threshold = tol * (1.0 - gamma) / gamma
    residual = float("inf")
    for sweep in range(1, max_iter + 1):
        probs = optimistic_kernel(center, radius, v)
        v_next = bellman_backup(probs, values, penalty, gamma, v).max(axis=1)
        residual = float(np.max(np.abs(v_next - v)))
        v = v_next
        if residual <= threshold:
            break
    else:
        raise ConvergenceError(residual, max_iter, f"extended value iteration stalled at residual {residual:.3e}")

    kernel = _as_kernel(optimistic_kernel(center, radius, v))
    solution = solve_penalized_mdp(kernel, rewards, penalty, gamma, tol, warm_start=v)
    return OptimisticSolution(kernel=kernel, solution=solution, penalty_used=penalty, sweeps=sweep)


def _gap_ascent_rows(center, radius, probs, v, policy, state, gamma, other_rows) -> np.ndarray:
    """Move every row to the L1 extreme that raises Q(state,1) - Q(state,0) given V.

    The (state, 1) row maximizes p . V and the (state, 0) row minimizes it.
    With ``other_rows="optimistic"`` every other row maximizes p . V. With
    ``"sensitivity"`` the sign of each row's first-order effect on the gap
    picks the maximizer or the minimizer instead.
    """
    upper = optimistic_kernel(center, radius, v)
    if other_rows == "optimistic":
        upper[state, 0] = l1_pessimistic_row(center[state, 0], float(radius[state, 0]), v)
        return upper

    num_states, num_actions = center.shape[:2]
    states = np.arange(num_states)
    p_pi = probs[states, policy]
    diff = probs[state, 1] - probs[state, 0]
    weights = np.linalg.solve((np.eye(num_states) - gamma * p_pi).T, diff)

    coef = np.zeros((num_states, num_actions))
    coef[states, policy] = gamma * gamma * weights
    coef[state, 1] += gamma
    coef[state, 0] -= gamma

    lower = pessimistic_kernel(center, radius, v)
    return np.where(coef[:, :, None] >= 0.0, upper, lower)


def _ascend_gap(center, radius, values, state, m, gamma, tol, probs, v, policy, g, other_rows):
    """Alternate exact solves and row moves; return the best (gap, probs, v) seen."""
    best = (g, probs, v)
    previous = g
    alternations = 0
    for alternations in range(1, MAX_ALTERNATIONS + 1):
        moved = _gap_ascent_rows(center, radius, probs, v, policy, state, gamma, other_rows)
        if np.array_equal(moved, probs):
            break
        probs = moved
        v, q, policy, _ = solve_arrays(probs, values, m, gamma, tol, warm_v=v)
        g = float(q[state, 1] - q[state, 0])
        if g > best[0]:
            best = (g, probs, v)
        if g > 0.0 or abs(g - previous) < GAP_CHANGE_TOL:
            break
        previous = g
    else:
        logger.warning(
            f"Gap ascent hit {MAX_ALTERNATIONS} alternations | state={state} | penalty={m:.4f} | gap={best[0]:.3e}"
        )

    if best[0] <= 0.0:
        logger.debug(
            f"Gap ascent settled at a local optimum | state={state} | penalty={m:.4f} | "
            f"gap={best[0]:.3e} | alternations={alternations}"
        )
    return best


def index_upper_bound(ball: ArmBall, rewards: RewardTable, state: int, gamma: float) -> float:
    """Penalty at and above which no ball member strictly prefers pulling ``state``.

    For penalties m >= 0 every value function spans at most
    (max R - min R) / (1 - gamma), and the two rows of ``state`` lie within
    their center distance plus both radii of each other in L1.
    """
    center, radius = ball.center.probs, ball.effective_radius
    values = rewards.values
    spread = float(np.abs(center[state, 1] - center[state, 0]).sum() + radius[state, 1] + radius[state, 0])
    span = float(values.max() - values.min()) / (1.0 - gamma)
    bound = float(values[state, 1] - values[state, 0]) + gamma * 0.5 * min(spread, MAX_L1_RADIUS) * span
    return min(max(bound, 0.0), search_interval(rewards, gamma)[1])


def solve_p_m(
    ball: ArmBall,
    rewards: RewardTable,
    state: int,
    gamma: float,
    tol: float = SOLVER_TOL,
    floor: Optional[float] = None,
    width: float = INDEX_WIDTH,
    memoizer: Optional[IndexMemoizer] = None,
    other_rows: str = "optimistic",
) -> OptimisticIndex:
    """Highest Whittle index of ``state`` over kernels in the ball.

    A penalty m is feasible when some ball member still strictly prefers
    pulling at m. The search runs between the center's index, which is
    feasible, and ``index_upper_bound``. Each test first re-solves the kernel
    that won the previous test; if that one is infeasible, gap ascent starts
    from it. The ascent is local, so the result is a lower bound on the true
    optimum.

    Args:
        ball: One arm's center kernel and radii.
        rewards: Known rewards.
        state: State whose index is wanted.
        gamma: Discount in (0, 1).
        tol: Solver tolerance.
        floor: Early-termination threshold, as in ``whittle_index``.
        width: Bisection stopping width.
        memoizer: Optional cache keyed on the rounded center and radii.
        other_rows: Rule for rows other than (state, 0) and (state, 1)
            during gap ascent, ``"optimistic"`` or ``"sensitivity"``.

    Returns:
        ``OptimisticIndex`` with the largest penalty found feasible and the
        kernel attaining it. A point ball returns ``whittle_index`` on its
        center.
    """
    if not 0 <= state < ball.center.num_states:
        raise ValueError(f"state {state} out of range")
    if other_rows not in GAP_ROWS:
        raise ValueError(f"other_rows must be one of {GAP_ROWS}, got {other_rows!r}")

    if not np.any(ball.effective_radius > 0.0):
        result = whittle_index(ball.center, rewards, state, gamma, tol, floor=floor, width=width, memoizer=memoizer)
        return OptimisticIndex(result.value, ball.center, result.pruned)

    key = None
    if memoizer is not None:
        key = memoizer.key(
            state,
            ball.center.probs,
            ball.effective_radius,
            extra=(gamma, tol, width, other_rows, rewards.values.tobytes()),
        )
        cached = memoizer.lookup(key)
        if cached is not None:
            return cached

    center, radius = ball.center.probs, ball.effective_radius
    values = rewards.values
    upper = index_upper_bound(ball, rewards, state, gamma)
    if floor is not None and upper < floor:
        index_searches_total.labels(kind="optimistic", outcome="pruned").inc()
        logger.debug(f"Optimistic index search pruned by bound | state={state} | upper={upper:.4f}")
        return OptimisticIndex(upper, ball.center, True)

    center_v = [None]
    center_gaps = {}

    def center_gap(m: float) -> float:
        v, q, _, _ = solve_arrays(center, values, m, gamma, tol, warm_v=center_v[0])
        center_v[0] = v
        center_gaps[m] = float(q[state, 1] - q[state, 0])
        return center_gaps[m]

    # No ball member, the center included, prefers pulling at the bound
    lower = bisect_index(
        center_gap, search_interval(rewards, gamma)[0], upper, width, kind="center", point="lower", upper_gap=0.0
    ).value

    warm = {"probs": center, "v": center_v[0]}
    feasible = {"probs": center}

    def max_gap(m: float) -> float:
        probs = warm["probs"]
        v, q, policy, _ = solve_arrays(probs, values, m, gamma, tol, warm_v=warm["v"])
        g = float(q[state, 1] - q[state, 0])
        if g <= 0.0:
            g, probs, v = _ascend_gap(center, radius, values, state, m, gamma, tol, probs, v, policy, g, other_rows)
        warm["probs"], warm["v"] = probs, v
        if g > 0.0:
            feasible["probs"] = probs
        return g

    result = bisect_index(
        max_gap,
        lower,
        upper,
        width,
        floor,
        kind="optimistic",
        point="lower",
        lower_gap=center_gaps[lower],
        upper_gap=0.0,
    )
    answer = OptimisticIndex(result.value, _as_kernel(feasible["probs"]), result.pruned)
    if result.pruned:
        logger.debug(f"Optimistic index search pruned | state={state} | upper={result.value:.4f}")
    elif memoizer is not None:
        memoizer.store(key, answer)
    return answer


def extreme_kernel(ball: ArmBall) -> TransitionKernel:
    """Kernel at the confidence endpoints: UCB for pulling, LCB for not pulling.

    Raises:
        ValueError: unless the arm has two states and two actions.
    """
    center = ball.center
    if center.num_states != 2 or center.num_actions != 2:
        raise ValueError("extreme_kernel needs a 2-state, 2-action arm")
    half = ball.effective_radius / 2.0
    good = center.probs[:, :, GOOD_STATE].copy()
    good[:, 1] = np.minimum(1.0, good[:, 1] + half[:, 1])
    good[:, 0] = np.maximum(0.0, good[:, 0] - half[:, 0])
    probs = np.empty_like(center.probs)
    probs[:, :, GOOD_STATE] = good
    probs[:, :, 1 - GOOD_STATE] = 1.0 - good
    # Zero-radius rows keep the center bit for bit
    probs = np.where(ball.radius[:, :, None] > 0.0, probs, center.probs)
    return TransitionKernel(probs=probs)
