"""Baselines: Whittle-index Q-learning, uniform random pulls and the full-information oracle."""
from typing import FrozenSet, List, Optional, Sequence

import numpy as np

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.learners.base import EpisodePlan, IndexLearner, Learner
from ucwhittle.models import LearnerConfig
from ucwhittle.planning.whittle import IndexResult, LazyIndexTable, WhittleTable, top_k_pull, whittle_index


class WIQL(Learner):
    """Tabular Q-learning; arms are ranked by Q(s, 1) - Q(s, 0)."""

    name = "wiql"

    def __init__(self, rewards: RewardTable, num_arms: int, budget: int,
                 config: Optional[LearnerConfig] = None, seed: int = 0):
        super().__init__(rewards, num_arms, budget, config, seed)
        shape = (num_arms, self.num_states, self.num_actions)
        self.state.q_table = np.zeros(shape)
        self.state.visits = np.zeros(shape, dtype=np.int64)

    def epsilon(self) -> float:
        """Exploration rate N / (N + steps), unless fixed by config."""
        if self.config.wiql_epsilon is not None:
            return self.config.wiql_epsilon
        return self.num_arms / (self.num_arms + self.state.steps)

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        return EpisodePlan(episode=t, initial_states=initial_states, penalty=self.state.current_penalty)

    def q_gaps(self) -> WhittleTable:
        q = self.state.q_table
        return WhittleTable(indices=q[:, :, 1] - q[:, :, 0], source=self.name)

    def _select(self, states: np.ndarray, budget: int) -> FrozenSet[int]:
        if self.rng.random() < self.epsilon():
            return frozenset(int(arm) for arm in self.rng.choice(self.num_arms, size=budget, replace=False))
        return top_k_pull(self.q_gaps(), states, budget, prune=False)

    def _learn(self, transitions: List[Sequence[int]], rewards: np.ndarray) -> None:
        q, visits = self.state.q_table, self.state.visits
        gamma = self.config.gamma
        for (arm, s, a, s_next), r in zip(transitions, rewards):
            alpha = 1.0 / (1.0 + visits[arm, s, a])
            target = r + gamma * q[arm, s_next].max()
            q[arm, s, a] = (1.0 - alpha) * q[arm, s, a] + alpha * target
            visits[arm, s, a] += 1


class RandomLearner(Learner):
    """Pulls K arms uniformly at random without replacement."""

    name = "random"

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        return EpisodePlan(episode=t, initial_states=initial_states, penalty=self.state.current_penalty)

    def _select(self, states: np.ndarray, budget: int) -> FrozenSet[int]:
        return frozenset(int(arm) for arm in self.rng.choice(self.num_arms, size=budget, replace=False))


class Oracle(IndexLearner):
    """Whittle threshold policy on the true kernels, with top-K pulls."""

    name = "oracle"

    def __init__(self, rewards: RewardTable, num_arms: int, budget: int,
                 config: Optional[LearnerConfig] = None, seed: int = 0,
                 kernels: Optional[List[TransitionKernel]] = None):
        super().__init__(rewards, num_arms, budget, config, seed)
        if kernels is None or len(kernels) != num_arms:
            raise ValueError("the oracle needs the true kernel of every arm")
        self.kernels = list(kernels)
        config = self.config

        def resolve(arm: int, state: int, floor: Optional[float]) -> IndexResult:
            return whittle_index(
                self.kernels[arm],
                self.rewards,
                state,
                config.gamma,
                config.solver_tol,
                floor=floor,
                width=config.index_width,
                memoizer=self.state.memoizer,
            )

        # Shared by every episode
        self.table = LazyIndexTable(num_arms, self.num_states, resolve, source="oracle:true")

    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        return EpisodePlan(
            episode=t,
            initial_states=initial_states,
            penalty=self.state.current_penalty,
            table=self.table,
            kernels=self.kernels,
        )

    def end_episode(self) -> None:
        """The oracle does not adapt."""
