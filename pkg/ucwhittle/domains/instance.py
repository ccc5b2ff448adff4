"""RMAB instances."""
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ucwhittle.core.kernel import GOOD_STATE, RewardTable, TransitionKernel

BAD_STATE = 1 - GOOD_STATE


class RmabInstance(BaseModel):
    """True kernels, shared rewards, initial states and budget."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kernels: List[TransitionKernel] = Field(..., description="True kernel P* of each arm")
    rewards: RewardTable
    initial_states: np.ndarray = Field(..., description="s_init per arm")
    budget: int = Field(..., ge=0)
    source: str = Field("custom", description="Domain that produced the instance")

    @field_validator("initial_states", mode="before")
    @classmethod
    def freeze_states(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=int).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_instance(self) -> "RmabInstance":
        if self.budget > self.num_arms:
            raise ValueError(f"budget K={self.budget} exceeds N={self.num_arms}")
        if len(self.initial_states) != self.num_arms:
            raise ValueError("need one initial state per arm")
        shape = self.rewards.values.shape
        for i, kernel in enumerate(self.kernels):
            if kernel.probs.shape[:2] != shape:
                raise ValueError(f"arm {i} kernel shape {kernel.probs.shape} does not match rewards {shape}")
        if np.any(self.initial_states < 0) or np.any(self.initial_states >= shape[0]):
            raise ValueError("initial state out of range")
        return self

    @property
    def num_arms(self) -> int:
        return len(self.kernels)

    @property
    def num_states(self) -> int:
        return self.rewards.values.shape[0]

    def stacked(self) -> np.ndarray:
        """All kernels as one (arm, state, action, next_state) array."""
        if not self.kernels:
            return np.zeros((0,) + self.rewards.values.shape + (self.num_states,))
        return np.stack([kernel.probs for kernel in self.kernels])


def validity_violations(good: np.ndarray) -> List[str]:
    """Broken validity constraints of one binary arm.

    Args:
        good: 2x2 array of P(s, a, good) indexed (state, action).
    """
    problems = []
    for s in (BAD_STATE, GOOD_STATE):
        if good[s, 1] < good[s, 0]:
            problems.append(f"acting must help: P({s},1,good) < P({s},0,good)")
    for a in (0, 1):
        if good[GOOD_STATE, a] < good[BAD_STATE, a]:
            problems.append(f"good start must help: P(good,{a},good) < P(bad,{a},good)")
    return problems
