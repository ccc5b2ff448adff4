"""Solver and experiment metrics."""
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

registry = CollectorRegistry()

# Index searches
index_searches_total = Counter(
    "index_searches_total",
    "Total number of index bisection searches",
    ["kind", "outcome"],  # kind: whittle/center/optimistic, outcome: exact/pruned
    registry=registry,
)

memo_lookups_total = Counter(
    "memo_lookups_total",
    "Total number of index memoizer lookups",
    ["result"],  # hit, miss
    registry=registry,
)

# Penalized-MDP solves
mdp_solves_total = Counter(
    "mdp_solves_total",
    "Total number of penalized MDP solves",
    ["method"],
    registry=registry,
)

# Experiment runs
episode_duration_seconds = Histogram(
    "episode_duration_seconds",
    "Wall-clock duration of one learner episode",
    ["algorithm"],
    buckets=(0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0),
    registry=registry,
)

learner_failures_total = Counter(
    "learner_failures_total",
    "Total number of failed (seed, algorithm) runs",
    ["algorithm"],
    registry=registry,
)


@contextmanager
def track_episode(algorithm: str):
    """Observe the duration of one episode."""
    start = time.perf_counter()
    try:
        yield
    finally:
        episode_duration_seconds.labels(algorithm=algorithm).observe(time.perf_counter() - start)


def export_metrics(path: Union[str, Path]) -> Path:
    """Write the registry in text exposition format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), registry)
    return path


COUNTERS = (index_searches_total, memo_lookups_total, mdp_solves_total, learner_failures_total)


def counter_snapshot() -> Dict[Tuple[str, tuple], float]:
    """Every counter sample keyed by (sample name, sorted labels)."""
    snapshot = {}
    for counter in COUNTERS:
        for metric in counter.collect():
            for sample in metric.samples:
                if sample.name.endswith("_total"):
                    snapshot[(sample.name, tuple(sorted(sample.labels.items())))] = sample.value
    return snapshot


def counts_since(before: Dict[Tuple[str, tuple], float]) -> Dict[Tuple[str, tuple], float]:
    """Counter increments since ``before``."""
    deltas = {}
    for key, value in counter_snapshot().items():
        delta = value - before.get(key, 0.0)
        if delta > 0.0:
            deltas[key] = delta
    return deltas


def merge_counts(
    deltas: Dict[Tuple[str, tuple], float], episode_seconds: Optional[Dict[str, List[float]]] = None
) -> None:
    """Add increments and episode durations recorded in another process."""
    by_sample = {metric.name + "_total": counter for counter in COUNTERS for metric in counter.collect()}
    for (name, labels), amount in deltas.items():
        by_sample[name].labels(**dict(labels)).inc(amount)
    for algorithm, durations in (episode_seconds or {}).items():
        for seconds in durations:
            episode_duration_seconds.labels(algorithm=algorithm).observe(seconds)
