"""Confidence regions over transition kernels and optimistic planning on them."""
from ucwhittle.learning.confidence import (
    ArmBall,
    ConfidenceRegion,
    Transition,
    TransitionCounts,
    build_region,
    contains,
    record_transitions,
)
from ucwhittle.learning.optimism import (
    OptimisticIndex,
    OptimisticSolution,
    extreme_kernel,
    l1_optimistic_row,
    solve_p_m,
    solve_p_v,
)

__all__ = [
    "ArmBall",
    "ConfidenceRegion",
    "Transition",
    "TransitionCounts",
    "build_region",
    "contains",
    "record_transitions",
    "OptimisticIndex",
    "OptimisticSolution",
    "extreme_kernel",
    "l1_optimistic_row",
    "solve_p_m",
    "solve_p_v",
]
