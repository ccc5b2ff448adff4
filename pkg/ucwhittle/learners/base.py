"""Learner interface shared by every online algorithm."""
import math
import zlib
from abc import ABC, abstractmethod
from typing import FrozenSet, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.learning.confidence import ConfidenceRegion, TransitionCounts, record_transitions
from ucwhittle.models import LearnerConfig
from ucwhittle.planning.whittle import IndexMemoizer, IndexTable, kth_largest_index, top_k_pull


class ActionSet(BaseModel):
    """Arms pulled at one timestep."""

    model_config = ConfigDict(frozen=True)

    pulled: FrozenSet[int] = Field(default_factory=frozenset)
    budget: int = Field(..., ge=0)
    num_arms: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_budget(self) -> "ActionSet":
        if len(self.pulled) > self.budget:
            raise ValueError(f"{len(self.pulled)} arms pulled with budget {self.budget}")
        if any(not 0 <= arm < self.num_arms for arm in self.pulled):
            raise ValueError(f"pulled arms {sorted(self.pulled)} out of range for {self.num_arms} arms")
        return self

    def as_array(self) -> np.ndarray:
        """Binary action per arm."""
        actions = np.zeros(self.num_arms, dtype=int)
        actions[list(self.pulled)] = 1
        return actions


class LearnerState(BaseModel):
    """Mutable knowledge of one learner."""

    model_config = ConfigDict(arbitrary_types_allowed=True, validate_assignment=True)

    counts: TransitionCounts
    current_penalty: float = Field(..., description="Penalty lambda used for the next plan")
    memoizer: Optional[IndexMemoizer] = None
    rng_seed: int
    q_table: Optional[np.ndarray] = Field(None, description="WIQL Q(arm, s, a)")
    visits: Optional[np.ndarray] = Field(None, description="WIQL visit counts (arm, s, a)")
    steps: int = Field(0, ge=0, description="Timesteps acted so far")

    @field_validator("current_penalty")
    @classmethod
    def finite_penalty(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("current_penalty must be finite")
        return v


class EpisodePlan(BaseModel):
    """Planning artifacts produced at the start of an episode."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    episode: int = Field(..., ge=1)
    initial_states: np.ndarray
    penalty: float
    table: Optional[IndexTable] = None
    kernels: Optional[List[TransitionKernel]] = Field(None, description="Kernels the indices are computed on")
    optimistic_values: Optional[np.ndarray] = Field(None, description="V-dagger per (arm, state)")
    region: Optional[ConfidenceRegion] = None


def learner_rng(seed: int, name: str) -> np.random.Generator:
    """Per-(seed, algorithm) generator independent of the environment stream."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


class Learner(ABC):
    """An online RMAB algorithm driven episode by episode."""

    name = "learner"

    def __init__(
        self,
        rewards: RewardTable,
        num_arms: int,
        budget: int,
        config: Optional[LearnerConfig] = None,
        seed: int = 0,
    ):
        if not 0 <= budget <= num_arms:
            raise ValueError(f"budget {budget} outside [0, {num_arms}]")
        self.rewards = rewards
        self.num_arms = num_arms
        self.budget = budget
        self.config = config or LearnerConfig()
        self.num_states, self.num_actions = rewards.values.shape
        self.rng = learner_rng(seed, self.name)
        self.state = LearnerState(
            counts=TransitionCounts.zeros(num_arms, self.num_states, self.num_actions),
            # lambda^(1) ~ U[0, 1]
            current_penalty=float(self.rng.uniform(0.0, 1.0)),
            memoizer=IndexMemoizer() if self.config.memoize else None,
            rng_seed=seed,
        )
        self.plan: Optional[EpisodePlan] = None

    def _check_states(self, states: Sequence[int]) -> np.ndarray:
        states = np.asarray(states, dtype=int)
        if states.shape != (self.num_arms,):
            raise ValueError(f"need one state per arm ({self.num_arms}), got shape {states.shape}")
        if np.any(states < 0) or np.any(states >= self.num_states):
            raise ValueError("state out of range")
        return states

    def begin_episode(self, initial_states: Sequence[int], t: int) -> EpisodePlan:
        """Plan for episode ``t`` from the episode's initial states."""
        if t < 1:
            raise ValueError(f"episode t must be >= 1, got {t}")
        self.plan = self._plan(self._check_states(initial_states), t)
        return self.plan

    def act(self, states: Sequence[int], budget: Optional[int] = None) -> ActionSet:
        """Choose at most ``budget`` arms to pull in ``states``."""
        if self.plan is None:
            raise RuntimeError("begin_episode must run before act")
        budget = self.budget if budget is None else budget
        states = self._check_states(states)
        pulled = self._select(states, budget)
        self.state.steps += 1
        return ActionSet(pulled=pulled, budget=budget, num_arms=self.num_arms)

    def observe(self, transitions: Sequence[Sequence[int]], rewards: Sequence[float]) -> None:
        """Record one timestep of (arm, s, a, s') transitions and per-arm rewards."""
        transitions = list(transitions)
        if not transitions:
            return
        rewards = np.asarray(rewards, dtype=float)
        if len(transitions) > self.num_arms or rewards.shape != (len(transitions),):
            raise ValueError("need one transition and one reward per arm")
        self.state.counts = record_transitions(self.state.counts, transitions)
        self._learn(transitions, rewards)

    def end_episode(self) -> None:
        """Close the episode."""

    @abstractmethod
    def _plan(self, initial_states: np.ndarray, t: int) -> EpisodePlan:
        """Build the episode plan."""

    @abstractmethod
    def _select(self, states: np.ndarray, budget: int) -> FrozenSet[int]:
        """Pick the arms to pull."""

    def _learn(self, transitions: List[Sequence[int]], rewards: np.ndarray) -> None:
        """Algorithm-specific update after the counts."""


class IndexLearner(Learner):
    """Learners that pull the top-K indices of their episode table."""

    def _select(self, states: np.ndarray, budget: int) -> FrozenSet[int]:
        return top_k_pull(
            self.plan.table, states, budget, prune=self.config.prune, priority=self._tie_priority(states)
        )

    def _tie_priority(self, states: np.ndarray) -> Optional[np.ndarray]:
        """Per-arm order among equal indices; ``None`` leaves ties to the lowest id."""
        return None

    def end_episode(self) -> None:
        """Move lambda to the K-th largest index at the episode's initial states."""
        if self.plan is None or self.budget == 0:
            return
        self.state.current_penalty = kth_largest_index(
            self.plan.table, self.plan.initial_states, self.budget
        )
