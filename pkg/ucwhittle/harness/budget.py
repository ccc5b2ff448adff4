"""Reward contribution of each unit of budget."""
from typing import Sequence

import numpy as np
import pandas as pd


def budget_impact_table(indices: Sequence[float]) -> pd.DataFrame:
    """Optimal vs. random index mass for every budget K = 1..N.

    optimal(K) is the sum of the top-K indices, random(K) = K * mean(indices),
    and gap(K) = (optimal - random) / K is the advantage per pulled arm.

    Raises:
        ValueError: if ``indices`` is empty or not sorted descending.
    """
    values = np.asarray(indices, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one index")
    if np.any(np.diff(values) > 0.0):
        raise ValueError("indices must be sorted in descending order")
    budgets = np.arange(1, values.size + 1)
    optimal = np.cumsum(values)
    random = budgets * values.mean()
    return pd.DataFrame(
        {"K": budgets, "optimal": optimal, "random": random, "gap": (optimal - random) / budgets}
    )
