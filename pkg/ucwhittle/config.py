"""Configuration module."""
import configparser
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Union

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ucwhittle.exceptions import ConfigError

# Penalized-MDP solver
SOLVER_TOL = 1e-9
MAX_SWEEPS = 10_000

# Index search
INDEX_WIDTH = 1e-4
MEMO_DECIMALS = 4

# Optimistic index alternation
MAX_ALTERNATIONS = 100
GAP_CHANGE_TOL = 1e-6

DEFAULT_DELTA = 0.05


class Settings(BaseSettings):
    """Process-level settings read from the environment."""

    OUT_DIR: str = "results"

    # Pydantic v2 settings configuration
    model_config = SettingsConfigDict(env_prefix="UCW_", env_file=".env", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    """Get process settings."""
    return Settings()


def parse_overrides(pairs) -> Dict[str, str]:
    """Turn ``key=value`` strings into a dict.

    Raises:
        ConfigError: if an entry has no ``=``.
    """
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(pair, "override must look like key=value")
        overrides[key.strip()] = value.strip()
    return overrides


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, str]] = None,
):
    """Load an INI-style experiment file and apply overrides.

    Section headers only group keys; every key lives in one flat namespace.

    Args:
        path: Config file; ``None`` starts from the defaults.
        overrides: ``key -> value`` strings applied after the file.

    Returns:
        A validated ``ExperimentConfig``.

    Raises:
        ConfigError: naming the path, the unknown key, or the invalid field.
    """
    from ucwhittle.models import ExperimentConfig

    raw: Dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(str(path), "config file not found")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path)
        except configparser.Error as e:
            raise ConfigError(str(path), f"cannot parse config: {e}") from e
        for section in parser.sections():
            raw.update(parser.items(section))
        # dataset paths in a file are relative to that file
        dataset = raw.get("dataset_path", "").strip()
        if dataset and dataset.lower() != "none" and not Path(dataset).is_absolute():
            raw["dataset_path"] = str(path.parent / dataset)
    raw.update(overrides or {})

    known = ExperimentConfig.known_keys()
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown config key")

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(key, error["msg"]) from e
