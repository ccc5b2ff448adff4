"""Single-arm penalized MDPs: kernels, rewards and exact solvers."""
from ucwhittle.core.kernel import PenalizedSolution, RewardTable, TransitionKernel
from ucwhittle.core.solver import (
    bellman_backup,
    evaluate_policy,
    lagrangian_value,
    solve_penalized_mdp,
)

__all__ = [
    "TransitionKernel",
    "RewardTable",
    "PenalizedSolution",
    "bellman_backup",
    "solve_penalized_mdp",
    "evaluate_policy",
    "lagrangian_value",
]
