"""Confidence-region learners: UCWhittle (value and penalty forms) and ExtremeWhittle."""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional

import numpy as np

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.learning.confidence import ConfidenceRegion, build_region
from ucwhittle.learning.optimism import extreme_kernel, solve_p_m, solve_p_v
from ucwhittle.learners.base import EpisodePlan, IndexLearner
from ucwhittle.models import LearnerConfig
from ucwhittle.planning.whittle import IndexResult, LazyIndexTable, whittle_index


class RegionLearner(IndexLearner):
    """Index learner planning on the confidence region built from its counts."""

    def __init__(
        self,
        rewards: RewardTable,
        num_arms: int,
        budget: int,
        config: Optional[LearnerConfig] = None,
        seed: int = 0,
        pinned_region: Optional[ConfidenceRegion] = None,
    ):
        super().__init__(rewards, num_arms, budget, config, seed)
        self.pinned_region = pinned_region

    def region(self, t: int) -> ConfidenceRegion:
        if self.pinned_region is not None:
            return self.pinned_region
        return build_region(self.state.counts, t, self.config.delta)

    def _map_arms(self, fn: Callable[[int], object]) -> list:
        workers = self.config.planning_workers
        if workers <= 1:
            return [fn(arm) for arm in range(self.num_arms)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(self.num_arms)))

    def _whittle_table(self, kernels: List[TransitionKernel], source: str) -> LazyIndexTable:
        config = self.config

        def resolve(arm: int, state: int, floor: Optional[float]) -> IndexResult:
            return whittle_index(
                kernels[arm],
                self.rewards,
                state,
                config.gamma,
                config.solver_tol,
                floor=floor,
                width=config.index_width,
                memoizer=self.state.memoizer,
            )

        return LazyIndexTable(self.num_arms, self.num_states, resolve, source=source)


class OptimisticLearner(RegionLearner):
    """UCWhittle forms: equal optimistic indices go to the arm pulled least in its state."""

    def _tie_priority(self, states: np.ndarray) -> Optional[np.ndarray]:
        if not self.config.visit_ties:
            return None
        pulls = self.state.counts.totals[np.arange(self.num_arms), states, 1]
        return -pulls.astype(float)


class UCWhittleValue(OptimisticLearner):
    """Plans on the highest-value kernel in the ball, then takes its Whittle indices."""

    name = "ucw-value"

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        region = self.region(t)
        penalty = self.state.current_penalty
        config = self.config

        solutions = self._map_arms(
            lambda arm: solve_p_v(region.arm(arm), self.rewards, penalty, config.gamma, config.solver_tol)
        )
        kernels = [solution.kernel for solution in solutions]
        return EpisodePlan(
            episode=t,
            initial_states=initial_states,
            penalty=penalty,
            table=self._whittle_table(kernels, source=f"{self.name}:optimistic:t={t}"),
            kernels=kernels,
            optimistic_values=np.stack([solution.solution.v for solution in solutions]),
            region=region,
        )


class UCWhittlePenalty(OptimisticLearner):
    """Takes the highest Whittle index attainable in the ball directly."""

    name = "ucw-penalty"

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        region = self.region(t)
        balls = region.arms()
        config = self.config

        def resolve(arm: int, state: int, floor: Optional[float]) -> IndexResult:
            found = solve_p_m(
                balls[arm],
                self.rewards,
                state,
                config.gamma,
                config.solver_tol,
                floor=floor,
                width=config.index_width,
                memoizer=self.state.memoizer,
                other_rows=config.gap_rows,
            )
            return IndexResult(found.index, found.pruned)

        return EpisodePlan(
            episode=t,
            initial_states=initial_states,
            penalty=self.state.current_penalty,
            table=LazyIndexTable(self.num_arms, self.num_states, resolve, source=f"{self.name}:t={t}"),
            region=region,
        )


class ExtremeWhittle(RegionLearner):
    """Whittle indices on the confidence endpoints: UCB when pulling, LCB when not."""

    name = "extreme"

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        region = self.region(t)
        kernels = self._map_arms(lambda arm: extreme_kernel(region.arm(arm)))
        return EpisodePlan(
            episode=t,
            initial_states=initial_states,
            penalty=self.state.current_penalty,
            table=self._whittle_table(kernels, source=f"{self.name}:t={t}"),
            kernels=kernels,
            region=region,
        )
