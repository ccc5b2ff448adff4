"""Experiment output files and their readers."""
from pathlib import Path
from typing import Dict, Sequence, Tuple, Union

import pandas as pd
from loguru import logger

from ucwhittle.harness.budget import budget_impact_table
from ucwhittle.harness.ergodicity import ergodicity_diagnostic
from ucwhittle.harness.experiment import ExperimentResult
from ucwhittle.models import ExperimentConfig
from ucwhittle.monitoring.logging_config import log_stage
from ucwhittle.monitoring.metrics import export_metrics

REGRET_COLUMNS = ["seed", "episode", "reward", "oracle_reward", "regret", "cum_regret", "smoothed_cum_regret"]
SWEEP_COLUMNS = ["sweep_key", "value", "algo", "final_cum_regret", "mean_seconds"]


def regret_filename(algorithm: str) -> str:
    return f"regret_{algorithm}.csv"


def write_outputs(result: ExperimentResult, config: ExperimentConfig, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write every output file into ``out_dir``.

    Returns:
        Map from output name to written path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    with log_stage("write outputs", out_dir=out_dir):
        for algorithm in result.curve.algorithms:
            path = out_dir / regret_filename(algorithm)
            result.curve.for_algorithm(algorithm)[REGRET_COLUMNS].to_csv(path, index=False)
            written[path.stem] = path

        path = out_dir / "summary.csv"
        result.curve.summary().to_csv(path, index=False)
        written["summary"] = path

        path = out_dir / "runtime.csv"
        result.runtimes.to_csv(path, index=False)
        written["runtime"] = path

        if not result.diagnostics.empty:
            path = out_dir / "diagnostics.csv"
            result.diagnostics.sort_values(["algo", "seed", "episode"]).to_csv(path, index=False)
            written["diagnostics"] = path

        if result.budget_indices:
            path = out_dir / "budget_table.csv"
            budget_impact_table(result.budget_indices).to_csv(path, index=False)
            written["budget_table"] = path

        if result.first_instance is not None and result.first_instance.num_states == 2:
            report = ergodicity_diagnostic(
                result.first_instance, config.epsilon_override, horizon=config.horizon
            )
            path = out_dir / "ergodicity.txt"
            path.write_text(report.render())
            written["ergodicity"] = path
            if report.sufficient is False:
                logger.warning(f"Horizon H={config.horizon} is below the ergodicity requirement")

        written["metrics"] = export_metrics(out_dir / "metrics.prom")
    return written


def sweep_dirname(key: str, value: str) -> str:
    return f"{key}={value}"


def sweep_table(points: Sequence[Tuple[str, ExperimentResult]], key: str) -> pd.DataFrame:
    """Final regret and runtime per (sweep value, algorithm)."""
    rows = []
    for value, result in points:
        runtimes = dict(zip(result.runtimes["algo"], result.runtimes["mean_seconds"]))
        for algorithm, regret in sorted(result.curve.final_regret().items()):
            rows.append({
                "sweep_key": key,
                "value": value,
                "algo": algorithm,
                "final_cum_regret": regret,
                "mean_seconds": runtimes.get(algorithm, float("nan")),
            })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_sweep_summary(
    points: Sequence[Tuple[str, ExperimentResult]], key: str, out_dir: Union[str, Path]
) -> Path:
    path = Path(out_dir) / "sweep_summary.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_table(points, key).to_csv(path, index=False)
    logger.info(f"Wrote sweep summary | points={len(points)} | path={path}")
    return path


def _read(path: Union[str, Path], **kwargs) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip", **kwargs)


def read_regret_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path)


def read_summary_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path)


def read_runtime_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path)


def read_budget_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path)


def read_sweep_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path, dtype={"value": str})


def read_diagnostics_csv(path: Union[str, Path]) -> pd.DataFrame:
    return _read(path)
