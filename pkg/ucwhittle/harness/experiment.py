"""The episodic experiment loop: learners against the oracle on shared randomness."""
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ucwhittle.core.solver import solve_penalized_mdp
from ucwhittle.domains.dataset import load_dataset
from ucwhittle.domains.generators import get_generator
from ucwhittle.domains.instance import RmabInstance
from ucwhittle.harness.regret import RegretCurve, episode_records
from ucwhittle.harness.simulator import RmabSimulator
from ucwhittle.learners import Learner, create_learner
from ucwhittle.learning.confidence import Transition, contains
from ucwhittle.models import ExperimentConfig
from ucwhittle.monitoring.logging_config import log_stage
from ucwhittle.monitoring.metrics import (
    counter_snapshot,
    counts_since,
    learner_failures_total,
    merge_counts,
    track_episode,
)
from ucwhittle.planning.whittle import ranked_indices

ORACLE = "oracle"

# Slack for the optimistic-value check
OPTIMISM_TOL = 1e-6

DIAGNOSTIC_COLUMNS = ["algo", "seed", "episode", "distinct_arms", "index_spread"]


class LearnerRun(BaseModel):
    """Outcome of one learner on one seed."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    algorithm: str
    seed: int
    episode_rewards: List[float]
    seconds: float
    episode_seconds: List[float] = Field(default_factory=list)
    actions: Optional[List[List[frozenset]]] = Field(None, description="Pulled arms per (episode, step)")
    optimism_checks: int = 0
    optimism_violations: int = 0
    diagnostics: List[Dict[str, Any]] = Field(
        default_factory=list, description="Per-episode action and index diagnostics"
    )


class RunFailure(BaseModel):
    """A (seed, algorithm) run excluded from aggregates."""

    algorithm: str
    seed: int
    error: str


class SeedOutcome(BaseModel):
    """Every run on one seed plus the oracle's ranked initial-state indices."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    runs: List[LearnerRun] = Field(default_factory=list)
    failures: List[RunFailure] = Field(default_factory=list)
    oracle_indices: Optional[List[float]] = None
    metric_counts: Dict[Any, float] = Field(
        default_factory=dict, description="Counter increments from a worker process"
    )


class ExperimentResult(BaseModel):
    """Regret curves, runtimes and failures of a whole experiment."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    curve: RegretCurve
    runtimes: pd.DataFrame
    failures: List[RunFailure] = Field(default_factory=list)
    optimism_checks: Dict[str, int] = Field(default_factory=dict)
    optimism_violations: Dict[str, int] = Field(default_factory=dict)
    budget_indices: Optional[List[float]] = Field(None, description="Oracle indices at the first seed's initial states")
    first_instance: Optional[RmabInstance] = None
    diagnostics: pd.DataFrame = Field(default_factory=lambda: pd.DataFrame(columns=DIAGNOSTIC_COLUMNS))


def build_instance(config: ExperimentConfig, seed: int) -> RmabInstance:
    """Instance for an experiment seed."""
    population_seed = config.population_seed_for(seed)
    if config.domain == "dataset":
        return load_dataset(
            config.dataset_path,
            config.num_arms,
            population_seed,
            strict=config.dataset_strict,
            budget=config.budget,
        )
    return get_generator(config.domain).generate(config.num_arms, population_seed, config.budget)


def _check_optimism(learner: Learner, instance: RmabInstance, gamma: float, tol: float) -> Optional[bool]:
    """Sum of optimistic values vs. the true optimum at the plan's penalty, when P* is in the ball."""
    plan = learner.plan
    if plan is None or plan.optimistic_values is None or plan.region is None:
        return None
    if not contains(plan.region, instance.kernels):
        return None
    arms = np.arange(instance.num_arms)
    optimistic = float(plan.optimistic_values[arms, plan.initial_states].sum())
    true = sum(
        float(solve_penalized_mdp(kernel, instance.rewards, plan.penalty, gamma, tol).v[s])
        for kernel, s in zip(instance.kernels, plan.initial_states)
    )
    return optimistic >= true - OPTIMISM_TOL



def _index_spread(learner: Learner) -> Optional[float]:
    """Largest minus smallest index at the plan's initial states."""
    plan = learner.plan
    if plan is None or plan.table is None:
        return None
    values = [plan.table.value(arm, int(s)).value for arm, s in enumerate(plan.initial_states)]
    return float(max(values) - min(values))


def run_learner(
    learner: Learner,
    instance: RmabInstance,
    simulator: RmabSimulator,
    config: ExperimentConfig,
    seed: int,
    record_actions: bool = False,
) -> LearnerRun:
    """Run one learner for T episodes of H steps.

    Each episode resets to the instance's initial states and accumulates
    sum_h gamma^h sum_i R(s_{h,i}, a_{h,i}). The optimism check and the
    per-episode diagnostics are left out of ``seconds``.
    """
    gamma = config.gamma
    discounts = gamma ** np.arange(config.horizon)
    episode_rewards, actions_log, episode_seconds, diagnostics = [], [], [], []
    checks = violations = 0
    untimed = 0.0
    start = time.perf_counter()

    for episode in range(config.episodes):
        episode_start = time.perf_counter()
        with track_episode(learner.name):
            initial_states = simulator.reset()
            learner.begin_episode(initial_states, episode + 1)

            pause = time.perf_counter()
            if config.check_optimism and learner.name == "ucw-value":
                verdict = _check_optimism(learner, instance, gamma, config.solver_tol)
                if verdict is not None:
                    checks += 1
                    if not verdict:
                        violations += 1
                        logger.warning(f"Optimism violated | seed={seed} | episode={episode + 1}")
            spread = _index_spread(learner) if config.diagnostics else None
            untimed += time.perf_counter() - pause

            states = initial_states
            total = 0.0
            pulled_log = []
            for h in range(config.horizon):
                action_set = learner.act(states)
                actions = action_set.as_array()
                next_states, rewards = simulator.step(states, actions, episode, h)
                learner.observe(
                    [Transition(i, int(states[i]), int(actions[i]), int(next_states[i])) for i in range(len(states))],
                    rewards,
                )
                total += discounts[h] * float(rewards.sum())
                pulled_log.append(action_set.pulled)
                states = next_states
            learner.end_episode()

        episode_seconds.append(time.perf_counter() - episode_start)
        episode_rewards.append(total)
        if record_actions:
            actions_log.append(pulled_log)
        if config.diagnostics:
            distinct = len(frozenset().union(*pulled_log))
            diagnostics.append({"episode": episode + 1, "distinct_arms": distinct, "index_spread": spread})
            logger.debug(
                f"Episode diagnostics | algorithm={learner.name} | seed={seed} | episode={episode + 1} | "
                f"distinct_arms={distinct} | index_spread={spread}"
            )

    return LearnerRun(
        algorithm=learner.name,
        seed=seed,
        episode_rewards=episode_rewards,
        seconds=time.perf_counter() - start - untimed,
        episode_seconds=episode_seconds,
        actions=actions_log if record_actions else None,
        optimism_checks=checks,
        optimism_violations=violations,
        diagnostics=diagnostics,
    )


def run_seed(config: ExperimentConfig, seed: int) -> SeedOutcome:
    """Run the oracle and every configured algorithm on one seed."""
    outcome = SeedOutcome(seed=seed)
    instance = build_instance(config, seed)
    learner_config = config.learner_config()
    algorithms = [ORACLE] + [name for name in config.algorithms if name != ORACLE]

    for algorithm in algorithms:
        simulator = RmabSimulator(instance, seed, config.episodes, config.horizon)
        try:
            with log_stage("run", algorithm=algorithm, seed=seed):
                learner = create_learner(
                    algorithm,
                    instance.rewards,
                    instance.num_arms,
                    instance.budget,
                    learner_config,
                    seed,
                    kernels=instance.kernels,
                )
                run = run_learner(learner, instance, simulator, config, seed)
        except Exception as e:
            learner_failures_total.labels(algorithm=algorithm).inc()
            outcome.failures.append(RunFailure(algorithm=algorithm, seed=seed, error=f"{type(e).__name__}: {e}"))
            if algorithm == ORACLE:
                logger.error(f"Oracle failed; excluding seed | seed={seed}")
                return outcome
            continue

        outcome.runs.append(run)
        if algorithm == ORACLE:
            outcome.oracle_indices = ranked_indices(learner.table, instance.initial_states).tolist()
    return outcome


def run_seed_in_worker(config: ExperimentConfig, seed: int) -> SeedOutcome:
    """``run_seed`` in a worker process, carrying its counter increments back."""
    before = counter_snapshot()
    outcome = run_seed(config, seed)
    outcome.metric_counts = counts_since(before)
    return outcome


def _merge_worker_metrics(outcomes: List[SeedOutcome]) -> None:
    for outcome in outcomes:
        durations: Dict[str, List[float]] = {}
        for run in outcome.runs:
            durations.setdefault(run.algorithm, []).extend(run.episode_seconds)
        merge_counts(outcome.metric_counts, durations)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every seed and assemble regret curves and runtimes.

    Runs that raise are logged, counted and left out of the aggregates.
    Seeds fan out to worker processes only when ``workers > 1`` and serial
    timing is off; worker counters and episode durations are merged into this
    process's registry.
    """
    with log_stage("experiment", domain=config.domain, seeds=len(config.seeds), algorithms=",".join(config.algorithms)):
        if config.workers > 1 and not config.serial_timing:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                outcomes = list(pool.map(run_seed_in_worker, [config] * len(config.seeds), config.seeds))
            _merge_worker_metrics(outcomes)
        else:
            outcomes = [run_seed(config, seed) for seed in config.seeds]

    frames, failures, timings, diagnostics = [], [], [], []
    checks: Dict[str, int] = {}
    violations: Dict[str, int] = {}
    budget_indices = None
    for outcome in outcomes:
        failures.extend(outcome.failures)
        oracle = next((run for run in outcome.runs if run.algorithm == ORACLE), None)
        if oracle is None:
            continue
        if budget_indices is None:
            budget_indices = outcome.oracle_indices
        for run in outcome.runs:
            if run.algorithm not in config.algorithms:
                continue
            frames.append(
                episode_records(run.algorithm, run.seed, run.episode_rewards, oracle.episode_rewards, config.smoothing_weight)
            )
            timings.append({"algo": run.algorithm, "seconds": run.seconds})
            checks[run.algorithm] = checks.get(run.algorithm, 0) + run.optimism_checks
            violations[run.algorithm] = violations.get(run.algorithm, 0) + run.optimism_violations
            diagnostics.extend({"algo": run.algorithm, "seed": run.seed, **row} for row in run.diagnostics)

    for failure in failures:
        logger.warning(f"Excluded run | algorithm={failure.algorithm} | seed={failure.seed} | error={failure.error}")

    runtimes = pd.DataFrame(timings, columns=["algo", "seconds"])
    runtimes = (
        runtimes.groupby("algo", sort=True)["seconds"].mean().rename("mean_seconds").reset_index()
        if not runtimes.empty
        else pd.DataFrame(columns=["algo", "mean_seconds"])
    )
    return ExperimentResult(
        curve=RegretCurve.from_frames(frames),
        runtimes=runtimes,
        failures=failures,
        optimism_checks=checks,
        optimism_violations=violations,
        budget_indices=budget_indices,
        first_instance=build_instance(config, config.seeds[0]),
        diagnostics=pd.DataFrame(diagnostics, columns=DIAGNOSTIC_COLUMNS),
    )
