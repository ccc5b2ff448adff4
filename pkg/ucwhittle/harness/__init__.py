"""Regret experiments: simulation, aggregation, diagnostics and outputs."""
from ucwhittle.harness.budget import budget_impact_table
from ucwhittle.harness.ergodicity import ErgodicityReport, ergodicity_diagnostic, sequence_bound
from ucwhittle.harness.experiment import (
    ExperimentResult,
    LearnerRun,
    RunFailure,
    build_instance,
    run_experiment,
    run_learner,
)
from ucwhittle.harness.regret import RegretCurve, smooth
from ucwhittle.harness.reporting import write_outputs
from ucwhittle.harness.simulator import RmabSimulator

__all__ = [
    "budget_impact_table",
    "ErgodicityReport",
    "ergodicity_diagnostic",
    "sequence_bound",
    "ExperimentResult",
    "LearnerRun",
    "RunFailure",
    "build_instance",
    "run_experiment",
    "run_learner",
    "RegretCurve",
    "smooth",
    "write_outputs",
    "RmabSimulator",
]
