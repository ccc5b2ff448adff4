"""Regret accounting, smoothing and cross-seed aggregation."""
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

RECORD_COLUMNS = [
    "algorithm",
    "seed",
    "episode",
    "reward",
    "oracle_reward",
    "regret",
    "cum_regret",
    "smoothed_cum_regret",
]


def smooth(series: Sequence[float], weight: float) -> np.ndarray:
    """Exponential smoothing: out[0] = in[0], out[k] = w*out[k-1] + (1-w)*in[k]."""
    if not 0.0 <= weight < 1.0:
        raise ValueError(f"smoothing weight must lie in [0, 1), got {weight}")
    values = np.asarray(series, dtype=float)
    out = np.empty_like(values)
    if values.size == 0:
        return out
    out[0] = values[0]
    for k in range(1, values.size):
        out[k] = weight * out[k - 1] + (1.0 - weight) * values[k]
    return out


def episode_records(
    algorithm: str,
    seed: int,
    rewards: Sequence[float],
    oracle_rewards: Sequence[float],
    weight: float,
) -> pd.DataFrame:
    """Per-episode regret rows for one (algorithm, seed) run."""
    rewards = np.asarray(rewards, dtype=float)
    oracle_rewards = np.asarray(oracle_rewards, dtype=float)
    if rewards.shape != oracle_rewards.shape:
        raise ValueError("algorithm and oracle must cover the same episodes")
    regret = oracle_rewards - rewards
    cum_regret = np.cumsum(regret)
    return pd.DataFrame(
        {
            "algorithm": algorithm,
            "seed": seed,
            "episode": np.arange(1, len(rewards) + 1),
            "reward": rewards,
            "oracle_reward": oracle_rewards,
            "regret": regret,
            "cum_regret": cum_regret,
            "smoothed_cum_regret": smooth(cum_regret, weight),
        },
        columns=RECORD_COLUMNS,
    )


class RegretCurve:
    """Per-(algorithm, seed, episode) regret records and their aggregates."""

    def __init__(self, records: pd.DataFrame):
        missing = set(RECORD_COLUMNS) - set(records.columns)
        if missing:
            raise ValueError(f"regret records lack columns {sorted(missing)}")
        self.records = records[RECORD_COLUMNS].sort_values(["algorithm", "seed", "episode"]).reset_index(drop=True)

    @classmethod
    def from_frames(cls, frames: List[pd.DataFrame]) -> "RegretCurve":
        if not frames:
            return cls(pd.DataFrame(columns=RECORD_COLUMNS))
        return cls(pd.concat(frames, ignore_index=True))

    @property
    def algorithms(self) -> List[str]:
        return sorted(self.records["algorithm"].unique())

    def for_algorithm(self, algorithm: str) -> pd.DataFrame:
        return self.records[self.records["algorithm"] == algorithm].reset_index(drop=True)

    def summary(self, column: str = "smoothed_cum_regret") -> pd.DataFrame:
        """Mean and standard error across seeds per (episode, algorithm)."""
        grouped = self.records.groupby(["episode", "algorithm"])[column]
        summary = grouped.agg(mean="mean", std="std", n="count").reset_index()
        summary["stderr"] = (summary["std"] / np.sqrt(summary["n"])).fillna(0.0)
        summary = summary.rename(columns={"algorithm": "algo"})
        return summary[["episode", "algo", "mean", "stderr"]].sort_values(["episode", "algo"]).reset_index(drop=True)

    def final_regret(self) -> Dict[str, float]:
        """Mean unsmoothed cumulative regret at the last episode per algorithm."""
        last = self.records["episode"].max()
        final = self.records[self.records["episode"] == last]
        return final.groupby("algorithm")["cum_regret"].mean().to_dict()

    def quartile_regret(self, algorithm: str) -> tuple:
        """Mean per-episode regret over the first and last quarter of episodes."""
        rows = self.for_algorithm(algorithm)
        episodes = int(rows["episode"].max())
        quarter = max(1, episodes // 4)
        first = rows[rows["episode"] <= quarter]["regret"].mean()
        last = rows[rows["episode"] > episodes - quarter]["regret"].mean()
        return float(first), float(last)
