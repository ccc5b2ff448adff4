"""Synthetic binary-state domains."""
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np
from loguru import logger

from ucwhittle.core.kernel import GOOD_STATE, RewardTable, TransitionKernel
from ucwhittle.domains.instance import BAD_STATE, RmabInstance, validity_violations

DEFAULT_BUDGET = 3

MAX_REDRAWS = 100


def instance_from_good_probs(
    good: np.ndarray, initial_states: np.ndarray, budget: int, source: str
) -> RmabInstance:
    """Binary instance with R(s, a) = s from per-arm P(s, a, good) tables (arm, state, action)."""
    kernels = [
        TransitionKernel.from_good_probs(g[BAD_STATE, 0], g[BAD_STATE, 1], g[GOOD_STATE, 0], g[GOOD_STATE, 1])
        for g in good
    ]
    return RmabInstance(
        kernels=kernels,
        rewards=RewardTable.binary(),
        initial_states=initial_states,
        budget=budget,
        source=source,
    )


class DomainGenerator(ABC):
    """Base interface for instance generators."""

    name = "domain"

    @abstractmethod
    def good_probs(self, num_arms: int, rng: np.random.Generator) -> np.ndarray:
        """Draw P(s, a, good) for every arm, shape (arm, state, action)."""

    def generate(self, num_arms: int, rng_seed: int, budget: Optional[int] = None) -> RmabInstance:
        """Draw an instance; initial states come from the same seeded stream."""
        if num_arms < 0:
            raise ValueError(f"num_arms must be nonnegative, got {num_arms}")
        budget = min(DEFAULT_BUDGET, num_arms) if budget is None else budget
        rng = np.random.default_rng(rng_seed)
        good = self.good_probs(num_arms, rng)
        initial_states = rng.integers(0, 2, size=num_arms)
        return instance_from_good_probs(good, initial_states, budget, source=self.name)


class MarginGenerator(DomainGenerator):
    """Uniform good-state probabilities on [low, high], repaired to be valid.

    Repairs multiply the offending probability by eta ~ U[0, 1]: when acting
    hurts, the passive probability shrinks; when starting good hurts, the
    bad-state probability shrinks. A product below ``low`` triggers a redraw of
    eta, and after ``MAX_REDRAWS`` redraws it is clamped to ``low``.
    """

    def __init__(self, low: float, high: float):
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f"invalid probability interval [{low}, {high}]")
        self.low = low
        self.high = high

    def _shrink(self, base: float, rng: np.random.Generator) -> float:
        for _ in range(MAX_REDRAWS):
            candidate = base * rng.uniform(0.0, 1.0)
            if candidate >= self.low:
                return candidate
        return self.low

    def repair(self, good: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Enforce both validity constraints on one arm's 2x2 table in place."""
        for _ in range(MAX_REDRAWS):
            if not validity_violations(good):
                return good
            for s in (BAD_STATE, GOOD_STATE):
                if good[s, 1] < good[s, 0]:
                    good[s, 0] = self._shrink(good[s, 1], rng)
            for a in (0, 1):
                if good[GOOD_STATE, a] < good[BAD_STATE, a]:
                    good[BAD_STATE, a] = self._shrink(good[GOOD_STATE, a], rng)

        logger.warning(f"{self.name} repair did not settle; clamping to the constraint boundary")
        good[:, 0] = np.minimum(good[:, 0], good[:, 1])
        good[BAD_STATE] = np.minimum(good[BAD_STATE], good[GOOD_STATE])
        return good

    def good_probs(self, num_arms: int, rng: np.random.Generator) -> np.ndarray:
        good = np.empty((num_arms, 2, 2))
        for arm in range(num_arms):
            good[arm] = self.repair(rng.uniform(self.low, self.high, size=(2, 2)), rng)
        return good


class WideMarginGenerator(MarginGenerator):
    """Good-state probabilities anywhere in [0, 1]."""

    name = "wide"

    def __init__(self):
        super().__init__(0.0, 1.0)


class ThinMarginGenerator(MarginGenerator):
    """Good-state probabilities confined to [0.2, 0.4]."""

    name = "thin"

    def __init__(self):
        super().__init__(0.2, 0.4)


GENERATORS: Dict[str, DomainGenerator] = {
    WideMarginGenerator.name: WideMarginGenerator(),
    ThinMarginGenerator.name: ThinMarginGenerator(),
}


def get_generator(name: str) -> DomainGenerator:
    try:
        return GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown domain '{name}'; choose from {sorted(GENERATORS)}") from None


def generate_wide(num_arms: int, rng_seed: int, budget: Optional[int] = None) -> RmabInstance:
    """Wide-margin instance."""
    return GENERATORS["wide"].generate(num_arms, rng_seed, budget)


def generate_thin(num_arms: int, rng_seed: int, budget: Optional[int] = None) -> RmabInstance:
    """Thin-margin instance."""
    return GENERATORS["thin"].generate(num_arms, rng_seed, budget)
