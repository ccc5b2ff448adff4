"""Transition counts, empirical kernels and L1 confidence balls."""
import math
from typing import Iterable, List, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ucwhittle.core.kernel import ROW_SUM_TOL, TransitionKernel

# L1 diameter of the probability simplex
MAX_L1_RADIUS = 2.0

MEMBERSHIP_TOL = 1e-12


class Transition(NamedTuple):
    """One observed step of one arm."""

    arm: int
    state: int
    action: int
    next_state: int


class TransitionCounts(BaseModel):
    """Visit counts N_i(s, a, s') for every arm."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    counts: np.ndarray = Field(..., description="Counts indexed (arm, state, action, next_state)")

    @field_validator("counts", mode="before")
    @classmethod
    def validate_counts(cls, v) -> np.ndarray:
        arr = np.array(v)
        if arr.ndim != 4 or arr.shape[1] != arr.shape[3]:
            raise ValueError(f"counts must be (arm, state, action, next_state), got {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("counts must be integers")
            arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        arr.setflags(write=False)
        return arr

    @classmethod
    def zeros(cls, num_arms: int, num_states: int, num_actions: int) -> "TransitionCounts":
        return cls(counts=np.zeros((num_arms, num_states, num_actions, num_states), dtype=np.int64))

    @property
    def totals(self) -> np.ndarray:
        """Row totals N_i(s, a)."""
        return self.counts.sum(axis=3)

    @property
    def shape(self):
        return self.counts.shape


def record_transitions(
    counts: TransitionCounts, observations: Iterable[Sequence[int]]
) -> TransitionCounts:
    """Return counts with each (arm, s, a, s') observation added once.

    Raises:
        ValueError: if an observation is malformed or out of range.
    """
    obs = np.asarray(list(observations), dtype=np.int64)
    if obs.size == 0:
        return counts
    if obs.ndim != 2 or obs.shape[1] != 4:
        raise ValueError("each observation must be (arm, state, action, next_state)")
    limits = np.array(counts.shape)
    if np.any(obs < 0) or np.any(obs >= limits):
        bad = obs[np.any((obs < 0) | (obs >= limits), axis=1)][0]
        raise ValueError(f"observation {tuple(int(x) for x in bad)} out of range for counts {counts.shape}")
    updated = np.array(counts.counts)
    np.add.at(updated, tuple(obs.T), 1)
    return TransitionCounts(counts=updated)


def confidence_radius(totals: np.ndarray, t: int, delta: float, num_arms: int) -> np.ndarray:
    """d = sqrt(2|S| ln(2|S||A| N t^4 / delta) / max(1, n)) per (s, a) row."""
    num_states, num_actions = totals.shape[-2], totals.shape[-1]
    log_term = math.log(2 * num_states * num_actions * num_arms * float(t) ** 4 / delta)
    return np.sqrt(2 * num_states * log_term / np.maximum(1, totals))


class ArmBall(NamedTuple):
    """One arm's slice of a confidence region."""

    center: TransitionKernel
    radius: np.ndarray

    @property
    def effective_radius(self) -> np.ndarray:
        """Radius clipped at the simplex diameter."""
        return np.minimum(self.radius, MAX_L1_RADIUS)


class ConfidenceRegion(BaseModel):
    """Empirical-mean kernels with per-(arm, s, a) L1 radii."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    center: np.ndarray = Field(..., description="Empirical kernels indexed (arm, state, action, next_state)")
    radius: np.ndarray = Field(..., description="L1 radii indexed (arm, state, action)")
    episode: int = Field(..., ge=1)
    delta: float = Field(..., gt=0.0, le=1.0)

    @field_validator("center", "radius", mode="before")
    @classmethod
    def freeze(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("region arrays must be finite")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_shapes(self) -> "ConfidenceRegion":
        if self.center.ndim != 4 or self.radius.shape != self.center.shape[:3]:
            raise ValueError(f"center {self.center.shape} and radius {self.radius.shape} disagree")
        if np.any(np.abs(self.center.sum(axis=3) - 1.0) > ROW_SUM_TOL):
            raise ValueError("center rows must sum to 1")
        if np.any(self.radius < 0.0):
            raise ValueError("radii must be nonnegative")
        return self

    @property
    def num_arms(self) -> int:
        return self.center.shape[0]

    def arm(self, i: int) -> ArmBall:
        return ArmBall(TransitionKernel(probs=self.center[i]), self.radius[i])

    def arms(self) -> List[ArmBall]:
        return [self.arm(i) for i in range(self.num_arms)]

    @classmethod
    def point(cls, kernels: Sequence[TransitionKernel], episode: int = 1) -> "ConfidenceRegion":
        """Zero-radius region pinned at ``kernels``."""
        center = np.stack([k.probs for k in kernels])
        return cls(center=center, radius=np.zeros(center.shape[:3]), episode=episode, delta=1.0)


def build_region(counts: TransitionCounts, t: int, delta: float) -> ConfidenceRegion:
    """Empirical means and Hoeffding-style radii at episode ``t``.

    Rows never visited are centered on the uniform distribution.
    """
    if t < 1:
        raise ValueError(f"episode t must be >= 1, got {t}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    raw = counts.counts.astype(float)
    totals = counts.totals
    num_states = raw.shape[3]
    with np.errstate(invalid="ignore", divide="ignore"):
        center = np.where(totals[..., None] > 0, raw / totals[..., None], 1.0 / num_states)
    radius = confidence_radius(totals, t, delta, num_arms=raw.shape[0])
    return ConfidenceRegion(center=center, radius=radius, episode=t, delta=delta)


def l1_distances(region: ConfidenceRegion, kernels: Sequence[TransitionKernel]) -> np.ndarray:
    """Per-(arm, s, a) L1 distance of ``kernels`` from the region center."""
    probs = np.stack([k.probs for k in kernels])
    if probs.shape != region.center.shape:
        raise ValueError(f"kernels {probs.shape} do not match region {region.center.shape}")
    return np.abs(probs - region.center).sum(axis=3)


def contains(region: ConfidenceRegion, kernels: Sequence[TransitionKernel]) -> bool:
    """True iff every row of every kernel lies inside its L1 ball."""
    return bool(np.all(l1_distances(region, kernels) <= region.radius + MEMBERSHIP_TOL))
