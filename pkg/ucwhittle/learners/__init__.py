"""Online learners behind one interface, selected by name."""
from typing import Dict, List, Optional, Type

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.learners.base import ActionSet, EpisodePlan, IndexLearner, Learner, LearnerState
from ucwhittle.learners.baselines import WIQL, Oracle, RandomLearner
from ucwhittle.learners.ucwhittle import ExtremeWhittle, UCWhittlePenalty, UCWhittleValue
from ucwhittle.models import LearnerConfig

LEARNERS: Dict[str, Type[Learner]] = {
    UCWhittleValue.name: UCWhittleValue,
    UCWhittlePenalty.name: UCWhittlePenalty,
    ExtremeWhittle.name: ExtremeWhittle,
    WIQL.name: WIQL,
    RandomLearner.name: RandomLearner,
    Oracle.name: Oracle,
}


def create_learner(
    name: str,
    rewards: RewardTable,
    num_arms: int,
    budget: int,
    config: Optional[LearnerConfig] = None,
    seed: int = 0,
    kernels: Optional[List[TransitionKernel]] = None,
    **kwargs,
) -> Learner:
    """Create a learner by name.

    Args:
        name: One of ``ucw-value``, ``ucw-penalty``, ``extreme``, ``wiql``, ``random``, ``oracle``.
        rewards: Known rewards.
        num_arms: Number of arms N.
        budget: Pulls per step K.
        config: Learner knobs.
        seed: Experiment seed.
        kernels: True kernels; required by the oracle, ignored otherwise.
        **kwargs: Extra constructor arguments (e.g. ``pinned_region``).

    Returns:
        The learner instance.
    """
    try:
        learner_cls = LEARNERS[name]
    except KeyError:
        raise ValueError(f"unknown learner '{name}'; choose from {sorted(LEARNERS)}") from None
    if learner_cls is Oracle:
        kwargs["kernels"] = kernels
    return learner_cls(rewards, num_arms, budget, config, seed, **kwargs)


__all__ = [
    "LEARNERS",
    "create_learner",
    "ActionSet",
    "EpisodePlan",
    "IndexLearner",
    "Learner",
    "LearnerState",
    "WIQL",
    "Oracle",
    "RandomLearner",
    "ExtremeWhittle",
    "UCWhittlePenalty",
    "UCWhittleValue",
]
