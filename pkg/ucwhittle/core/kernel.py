"""Transition kernels, reward tables and penalized-MDP solutions."""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

ROW_SUM_TOL = 1e-9

GOOD_STATE = 1


def _frozen_copy(value, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


class TransitionKernel(BaseModel):
    """Per-arm transition probabilities P(s, a, s')."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probs: np.ndarray = Field(..., description="Probabilities indexed (state, action, next_state)")

    @field_validator("probs", mode="before")
    @classmethod
    def validate_probs(cls, v) -> np.ndarray:
        arr = _frozen_copy(v, 3, "probs")
        if arr.shape[0] != arr.shape[2]:
            raise ValueError(f"state and next-state axes differ: {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        row_error = np.abs(arr.sum(axis=2) - 1.0)
        if np.any(row_error > ROW_SUM_TOL):
            s, a = np.unravel_index(np.argmax(row_error), row_error.shape)
            raise ValueError(f"row (s={s}, a={a}) sums to {arr[s, a].sum():.12f}")
        return arr

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    def row(self, state: int, action: int) -> np.ndarray:
        return self.probs[state, action]

    @classmethod
    def from_good_probs(
        cls, p0_pass: float, p0_act: float, p1_pass: float, p1_act: float
    ) -> "TransitionKernel":
        """Build a two-state kernel from its probabilities of moving to the good state.

        Args:
            p0_pass: P(bad, 0, good)
            p0_act: P(bad, 1, good)
            p1_pass: P(good, 0, good)
            p1_act: P(good, 1, good)
        """
        good = np.array([[p0_pass, p0_act], [p1_pass, p1_act]], dtype=float)
        return cls(probs=np.stack([1.0 - good, good], axis=2))

    def good_probs(self) -> Tuple[float, float, float, float]:
        """Inverse of ``from_good_probs`` for two-state kernels."""
        if self.num_states != 2 or self.num_actions != 2:
            raise ValueError("good_probs needs a 2-state, 2-action kernel")
        p = self.probs[:, :, GOOD_STATE]
        return float(p[0, 0]), float(p[0, 1]), float(p[1, 0]), float(p[1, 1])


class RewardTable(BaseModel):
    """Known rewards R(s, a)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="Rewards indexed (state, action)")

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v) -> np.ndarray:
        return _frozen_copy(v, 2, "values")

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.values)))

    def v_max(self, gamma: float) -> float:
        """Largest achievable absolute discounted value without penalties."""
        return self.r_max / (1.0 - gamma)

    @classmethod
    def binary(cls, num_states: int = 2, num_actions: int = 2) -> "RewardTable":
        """R(s, a) = s: good states pay 1, bad states pay 0."""
        states = np.arange(num_states, dtype=float)
        return cls(values=np.repeat(states[:, None], num_actions, axis=1))


class PenalizedSolution(BaseModel):
    """Fixed point of the penalized Bellman equation for one arm."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    v: np.ndarray = Field(..., description="Per-state value")
    q: np.ndarray = Field(..., description="Per-(state, action) value")
    policy: np.ndarray = Field(..., description="Greedy action per state, ties toward action 0")
    penalty: float = Field(..., description="Cost charged per unit of action")
    gamma: float = Field(..., gt=0.0, lt=1.0)
    iterations: int = Field(..., ge=0)

    def gap(self, state: int) -> float:
        """Q(state, 1) - Q(state, 0)."""
        return float(self.q[state, 1] - self.q[state, 0])
