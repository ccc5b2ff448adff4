"""Historical-arm datasets: one row of good-state probabilities per arm."""
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from ucwhittle.core.kernel import GOOD_STATE
from ucwhittle.domains.generators import DEFAULT_BUDGET, get_generator, instance_from_good_probs
from ucwhittle.domains.instance import BAD_STATE, RmabInstance, validity_violations
from ucwhittle.exceptions import DatasetSchemaError

# P(bad,0,good), P(bad,1,good), P(good,0,good), P(good,1,good)
COLUMNS = ["p0_pass", "p0_act", "p1_pass", "p1_act"]

_OVERLONG = "__overlong__"


def good_probs_frame(good: np.ndarray) -> pd.DataFrame:
    """Dataset rows for per-arm (state, action) good-state tables."""
    good = np.asarray(good, dtype=float).reshape(-1, 2, 2)
    return pd.DataFrame(
        {
            "p0_pass": good[:, BAD_STATE, 0],
            "p0_act": good[:, BAD_STATE, 1],
            "p1_pass": good[:, GOOD_STATE, 0],
            "p1_act": good[:, GOOD_STATE, 1],
        },
        columns=COLUMNS,
    )


def instance_frame(instance: RmabInstance) -> pd.DataFrame:
    """Dataset rows for the arms of a binary instance."""
    good = instance.stacked()[:, :, :, GOOD_STATE] if instance.num_arms else np.zeros((0, 2, 2))
    return good_probs_frame(good)


def write_dataset(rows: Union[RmabInstance, pd.DataFrame], path: Union[str, Path]) -> Path:
    """Write arms in the dataset schema.

    Args:
        rows: An instance or a frame with the schema columns.
        path: Destination CSV.
    """
    frame = instance_frame(rows) if isinstance(rows, RmabInstance) else rows[COLUMNS]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def generate_dataset(domain: str, num_arms: int, rng_seed: int) -> pd.DataFrame:
    """Rows for ``num_arms`` synthetic arms; matches ``generate`` for the same seed."""
    generator = get_generator(domain)
    return good_probs_frame(generator.good_probs(num_arms, np.random.default_rng(rng_seed)))


def _row_problem(raw: pd.Series) -> Optional[str]:
    if raw["p0_pass"] == _OVERLONG:
        return f"expected {len(COLUMNS)} columns, found more"
    if raw.isna().any():
        return f"expected {len(COLUMNS)} columns, found fewer"
    try:
        values = raw.astype(float)
    except ValueError:
        return "non-numeric value"
    if not np.all(np.isfinite(values)):
        return "non-finite value"
    out_of_range = [col for col in COLUMNS if not 0.0 <= values[col] <= 1.0]
    if out_of_range:
        return f"{out_of_range[0]}={values[out_of_range[0]]} outside [0, 1]"
    good = np.array([[values["p0_pass"], values["p0_act"]], [values["p1_pass"], values["p1_act"]]])
    problems = validity_violations(good)
    if problems:
        return problems[0]
    return None


def read_dataset(path: Union[str, Path], strict: bool = True) -> pd.DataFrame:
    """Parse and validate a dataset CSV.

    Returns:
        Valid rows as floats, with a ``line`` column holding each row's file line.

    Raises:
        FileNotFoundError: if the file is missing.
        DatasetSchemaError: on a bad header, or on a bad row in strict mode.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")

    try:
        raw = pd.read_csv(
            path,
            dtype=str,
            engine="python",
            skip_blank_lines=False,
            # Keep overlong rows so line numbers stay aligned
            on_bad_lines=lambda fields: [_OVERLONG] + [""] * (len(COLUMNS) - 1),
            keep_default_na=True,
        )
    except pd.errors.EmptyDataError:
        raise DatasetSchemaError(1, "file is empty") from None
    if list(raw.columns) != COLUMNS:
        raise DatasetSchemaError(1, f"header must be {','.join(COLUMNS)}, got {','.join(map(str, raw.columns))}")

    keep = []
    for position, (_, row) in enumerate(raw.iterrows()):
        line = position + 2
        if row.isna().all():
            continue
        problem = _row_problem(row)
        if problem is None:
            keep.append(line)
            continue
        if strict:
            raise DatasetSchemaError(line, problem)
        logger.warning(f"Skipping dataset row | path={path} | line={line} | reason={problem}")

    raw["line"] = np.arange(len(raw)) + 2
    valid = raw[raw["line"].isin(keep)].reset_index(drop=True).copy()
    valid[COLUMNS] = valid[COLUMNS].astype(float)
    return valid


def load_dataset(
    path: Union[str, Path],
    num_arms: int,
    rng_seed: int,
    strict: bool = True,
    budget: Optional[int] = None,
) -> RmabInstance:
    """Instance whose arms are rows sampled with replacement from a dataset.

    Raises:
        FileNotFoundError: if the file is missing.
        DatasetSchemaError: on schema violations (strict mode) or no valid rows.
    """
    rows = read_dataset(path, strict=strict)
    if rows.empty and num_arms > 0:
        raise DatasetSchemaError(0, f"{path} has no valid rows")
    rng = np.random.default_rng(rng_seed)
    picks = rng.integers(0, len(rows), size=num_arms) if num_arms else np.zeros(0, dtype=int)
    good = np.stack(
        [
            rows[["p0_pass", "p0_act"]].to_numpy()[picks],
            rows[["p1_pass", "p1_act"]].to_numpy()[picks],
        ],
        axis=1,
    ).reshape(num_arms, 2, 2)
    initial_states = rng.integers(0, 2, size=num_arms)
    budget = min(DEFAULT_BUDGET, num_arms) if budget is None else budget
    logger.debug(f"Sampled {num_arms} arms from {len(rows)} dataset rows | path={path}")
    return instance_from_good_probs(good, initial_states, budget, source=f"dataset:{Path(path).name}")
