"""Whittle indices by bisection, index tables and budgeted arm selection."""
import heapq
import threading
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Hashable, Iterable, NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ucwhittle.config import INDEX_WIDTH, MEMO_DECIMALS, SOLVER_TOL
from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.core.solver import solve_arrays
from ucwhittle.exceptions import BracketError
from ucwhittle.monitoring.metrics import index_searches_total, memo_lookups_total


class IndexResult(NamedTuple):
    """An index value; ``pruned`` marks an upper bound from an early-terminated search."""

    value: float
    pruned: bool = False


def search_interval(rewards: RewardTable, gamma: float) -> tuple:
    """Bracket [-V_max - 1, V_max + 1] that contains every indifference penalty."""
    bound = rewards.v_max(gamma) + 1.0
    return -bound, bound


def bisect_index(
    gap: Callable[[float], float],
    lower: float,
    upper: float,
    width: float = INDEX_WIDTH,
    floor: Optional[float] = None,
    kind: str = "whittle",
    point: str = "mid",
    lower_gap: Optional[float] = None,
    upper_gap: Optional[float] = None,
) -> IndexResult:
    """Find the penalty where ``gap`` stops being positive.

    ``gap(m) > 0`` means pulling is still strictly preferred at penalty ``m``.

    Args:
        gap: Action gap as a function of the penalty; must be positive at
            ``lower`` and non-positive at ``upper``.
        lower: Lower end of the search interval.
        upper: Upper end of the search interval.
        width: Stop once ``upper - lower`` falls below this.
        floor: Stop as soon as ``upper`` drops below this value.
        kind: Metric label.
        point: ``"mid"`` returns the final bracket midpoint, ``"lower"`` the
            largest penalty seen with a positive gap.
        lower_gap: Known gap at ``lower``; skips that evaluation.
        upper_gap: Known gap at ``upper``; skips that evaluation.

    Returns:
        The requested bracket point, or the upper bracket flagged ``pruned``.

    Raises:
        BracketError: if the interval does not bracket a sign change.
    """
    if point not in ("mid", "lower"):
        raise ValueError(f"point must be 'mid' or 'lower', got {point!r}")
    if lower_gap is None:
        lower_gap = gap(lower)
    if upper_gap is None:
        upper_gap = gap(upper)
    if not (lower_gap > 0.0 and upper_gap <= 0.0):
        raise BracketError(lower_gap, upper_gap)

    while upper - lower >= width:
        if floor is not None and upper < floor:
            index_searches_total.labels(kind=kind, outcome="pruned").inc()
            return IndexResult(upper, True)
        mid = 0.5 * (lower + upper)
        if gap(mid) > 0.0:
            lower = mid
        else:
            upper = mid

    index_searches_total.labels(kind=kind, outcome="exact").inc()
    if point == "lower":
        return IndexResult(lower, False)
    return IndexResult(0.5 * (lower + upper), False)


class IndexMemoizer:
    """Thread-safe map from rounded kernel digests to index values."""

    def __init__(self, decimals: int = MEMO_DECIMALS):
        self.decimals = decimals
        self._store: Dict[Hashable, Any] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def key(self, state: int, *arrays: np.ndarray, extra: tuple = ()) -> Hashable:
        """Digest of ``state`` and arrays rounded to ``decimals`` places."""
        parts = []
        for arr in arrays:
            # + 0.0 folds -0.0 into 0.0
            rounded = np.round(np.asarray(arr, dtype=float), self.decimals) + 0.0
            parts.append((rounded.shape, rounded.tobytes()))
        return (int(state), tuple(parts), extra)

    def lookup(self, key: Hashable) -> Optional[Any]:
        value = self._store.get(key)
        with self._lock:
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
        memo_lookups_total.labels(result="miss" if value is None else "hit").inc()
        return value

    def store(self, key: Hashable, value: Any) -> None:
        with self._lock:
            self._store.setdefault(key, value)

    def __len__(self) -> int:
        return len(self._store)


def whittle_index(
    kernel: TransitionKernel,
    rewards: RewardTable,
    state: int,
    gamma: float,
    tol: float = SOLVER_TOL,
    floor: Optional[float] = None,
    width: float = INDEX_WIDTH,
    memoizer: Optional[IndexMemoizer] = None,
) -> IndexResult:
    """Smallest penalty on pulling at which not pulling is as good as pulling.

    Each bisection step re-solves the penalized MDP warm-started from the
    previous step's values.

    Args:
        kernel: Arm kernel; action 1 is the pull.
        rewards: Known rewards.
        state: State whose index is wanted.
        gamma: Discount in (0, 1).
        tol: Solver tolerance.
        floor: Early-termination threshold (current K-th largest index).
        width: Bisection stopping width.
        memoizer: Optional cache of completed searches.

    Returns:
        ``IndexResult``; pruned results are upper bounds and never memoized.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 0 <= state < kernel.num_states:
        raise ValueError(f"state {state} out of range")

    key = None
    if memoizer is not None:
        key = memoizer.key(state, kernel.probs, extra=(gamma, tol, width, rewards.values.tobytes()))
        cached = memoizer.lookup(key)
        if cached is not None:
            return IndexResult(cached, False)

    probs, values = kernel.probs, rewards.values
    last_v = [None]

    def gap(m: float) -> float:
        v, q, _, _ = solve_arrays(probs, values, m, gamma, tol, warm_v=last_v[0])
        last_v[0] = v
        return float(q[state, 1] - q[state, 0])

    lower, upper = search_interval(rewards, gamma)
    result = bisect_index(gap, lower, upper, width, floor, kind="whittle")
    if result.pruned:
        logger.debug(f"Whittle search pruned | state={state} | upper={result.value:.4f} | floor={floor:.4f}")
    elif memoizer is not None:
        memoizer.store(key, result.value)
    return result


class IndexTable(ABC):
    """Per-arm, per-state index values queried by the selection rules."""

    @property
    @abstractmethod
    def num_arms(self) -> int:
        """Number of arms covered."""

    @abstractmethod
    def value(self, arm: int, state: int, floor: Optional[float] = None) -> IndexResult:
        """Index of ``arm`` in ``state``; may be pruned when ``floor`` is given."""


class WhittleTable(BaseModel, IndexTable):
    """Dense table of indices W_i(P_i, s)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: np.ndarray = Field(..., description="Index values indexed (arm, state)")
    source: str = Field("unknown", description="Kernel set that produced the table")

    @field_validator("indices", mode="before")
    @classmethod
    def validate_indices(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"indices must be (arm, state), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("indices must be finite")
        arr.setflags(write=False)
        return arr

    @property
    def num_arms(self) -> int:
        return self.indices.shape[0]

    def value(self, arm: int, state: int, floor: Optional[float] = None) -> IndexResult:
        return IndexResult(float(self.indices[arm, state]), False)

    def lookup(self, states: Sequence[int]) -> np.ndarray:
        """Current-state index of every arm."""
        return self.indices[np.arange(self.num_arms), np.asarray(states)]


class LazyIndexTable(IndexTable):
    """Index table that runs searches on demand.

    Completed searches are cached. A pruned search leaves an upper bound that
    answers later queries whose floor lies above it.
    """

    def __init__(
        self,
        num_arms: int,
        num_states: int,
        resolver: Callable[[int, int, Optional[float]], IndexResult],
        source: str = "lazy",
    ):
        self._num_arms = num_arms
        self.num_states = num_states
        self.source = source
        self._resolver = resolver
        self._cache: Dict[tuple, float] = {}
        self._bounds: Dict[tuple, float] = {}

    @property
    def num_arms(self) -> int:
        return self._num_arms

    def value(self, arm: int, state: int, floor: Optional[float] = None) -> IndexResult:
        cached = self._cache.get((arm, state))
        if cached is not None:
            return IndexResult(cached, False)
        bound = self._bounds.get((arm, state))
        if bound is not None and floor is not None and bound < floor:
            return IndexResult(bound, True)
        result = self._resolver(arm, state, floor)
        if result.pruned:
            # Pruned values are upper bounds on the index
            self._bounds[(arm, state)] = result.value
        else:
            self._cache[(arm, state)] = result.value
        return result

    def materialize(self) -> WhittleTable:
        """Resolve every (arm, state) without pruning."""
        indices = [
            [self.value(arm, state).value for state in range(self.num_states)]
            for arm in range(self.num_arms)
        ]
        return WhittleTable(indices=indices, source=self.source)


def _check_states(table: IndexTable, states: Sequence[int]) -> np.ndarray:
    states = np.asarray(states, dtype=int)
    if states.shape != (table.num_arms,):
        raise ValueError(f"need one state per arm ({table.num_arms}), got {states.shape}")
    return states


def threshold_policy(table: IndexTable, states: Sequence[int], penalty: float) -> np.ndarray:
    """Pull every arm whose current-state index is at least ``penalty``."""
    states = _check_states(table, states)
    return np.array(
        [int(table.value(arm, s).value >= penalty) for arm, s in enumerate(states)], dtype=int
    )


def top_k_pull(
    table: IndexTable,
    states: Sequence[int],
    budget: int,
    prune: bool = True,
    priority: Optional[Sequence[float]] = None,
) -> frozenset:
    """Arms with the ``budget`` largest current-state indices.

    Equal indices go to the higher ``priority`` when one is given, then to the
    lowest arm id. A size-K min-heap tracks the running selection; once full,
    its minimum is passed as the floor so searches that cannot enter the
    selection stop early.
    """
    states = _check_states(table, states)
    if not 0 <= budget <= table.num_arms:
        raise ValueError(f"budget {budget} outside [0, {table.num_arms}]")
    if priority is not None and len(priority) != table.num_arms:
        raise ValueError(f"need one priority per arm ({table.num_arms}), got {len(priority)}")
    if budget == 0:
        return frozenset()

    heap = []
    for arm, state in enumerate(states):
        floor = heap[0][0] if prune and len(heap) == budget else None
        result = table.value(arm, int(state), floor)
        if result.pruned:
            continue
        # Equal values: the larger arm id compares smaller and is evicted first
        item = (result.value, 0.0 if priority is None else float(priority[arm]), -arm)
        if len(heap) < budget:
            heapq.heappush(heap, item)
        else:
            heapq.heappushpop(heap, item)
    return frozenset(-neg_arm for _, _, neg_arm in heap)


def kth_largest_index(table: IndexTable, states: Sequence[int], budget: int) -> float:
    """K-th largest current-state index."""
    states = _check_states(table, states)
    if not 1 <= budget <= table.num_arms:
        raise ValueError(f"budget {budget} outside [1, {table.num_arms}]")
    values = sorted((table.value(arm, int(s)).value for arm, s in enumerate(states)), reverse=True)
    return values[budget - 1]


def ranked_indices(table: IndexTable, states: Iterable[int]) -> np.ndarray:
    """Current-state indices sorted in descending order."""
    values = [table.value(arm, int(s)).value for arm, s in enumerate(states)]
    return np.sort(np.asarray(values))[::-1]
