"""Logging configuration module."""
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Union

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level} | {name}:{function}:{line} | {message}"

_CONSOLE_LEVELS = {0: "WARNING", 1: "INFO"}


def console_level(verbosity: int) -> str:
    """Map ``-v`` counts to a console log level."""
    return _CONSOLE_LEVELS.get(verbosity, "DEBUG")


def setup_logging(log_dir: Optional[Union[str, Path]] = None, verbosity: int = 0) -> None:
    """Configure logging sinks.

    Args:
        log_dir: Directory for ``run.log`` and ``error.log``; console only when None.
        verbosity: 0 = warnings, 1 = info, 2+ = debug on the console.
    """
    # Remove default handlers
    logger.remove()

    logger.add(sys.stderr, level=console_level(verbosity), format="{level: <8} | {message}")

    if log_dir is None:
        return

    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    logger.add(
        str(log_dir / "run.log"),
        format=LOG_FORMAT,
        rotation="10 MB",
        level="DEBUG",
        enqueue=True,  # Runs may log from worker threads and processes
        catch=True,
    )

    logger.add(
        str(log_dir / "error.log"),
        format=LOG_FORMAT,
        level="ERROR",
        enqueue=True,
        catch=True,
        diagnose=True,
        filter=lambda record: record["level"].no >= logger.level("ERROR").no,
    )


def _context(fields: dict) -> str:
    return "".join(f" | {key}={value}" for key, value in fields.items())


@contextmanager
def log_stage(name: str, **context):
    """Log start, completion time and failure of an experiment stage."""
    start = time.perf_counter()
    logger.info(f"{name} started{_context(context)}")
    try:
        yield
    except Exception as e:
        logger.error(f"{name} failed{_context(context)} | error={e}")
        raise
    logger.info(
        f"{name} completed{_context(context)} | "
        f"duration={round((time.perf_counter() - start) * 1000)}ms"
    )
