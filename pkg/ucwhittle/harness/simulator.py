"""Episode simulation on common random numbers."""
import numpy as np

from ucwhittle.domains.instance import RmabInstance

# Spawn key separating environment draws from learner draws
ENV_STREAM = 0x5EED


class RmabSimulator:
    """Steps all arms of an instance with pre-drawn uniforms.

    One uniform per (episode, timestep, arm) is drawn up front and consumed by
    inverse-CDF sampling whatever the action, so every learner run on the same
    seed sees the same randomness.
    """

    def __init__(self, instance: RmabInstance, seed: int, episodes: int, horizon: int):
        self.instance = instance
        self.probs = instance.stacked()
        self.rewards = instance.rewards.values
        self.episodes = episodes
        self.horizon = horizon
        rng = np.random.default_rng([seed, ENV_STREAM])
        self.uniforms = rng.random((episodes, horizon, instance.num_arms))
        self._arms = np.arange(instance.num_arms)

    def reset(self) -> np.ndarray:
        """Initial states for a new episode."""
        return np.array(self.instance.initial_states)

    def step(self, states: np.ndarray, actions: np.ndarray, episode: int, timestep: int):
        """Advance every arm one step.

        Args:
            states: Current state per arm.
            actions: Action per arm.
            episode: Zero-based episode.
            timestep: Zero-based step within the episode.

        Returns:
            (next_states, rewards) where rewards are R(s, a) of the current step.
        """
        rows = self.probs[self._arms, states, actions]
        cdf = np.cumsum(rows, axis=1)
        u = self.uniforms[episode, timestep]
        next_states = np.minimum((u[:, None] >= cdf).sum(axis=1), rows.shape[1] - 1)
        return next_states, self.rewards[states, actions]
