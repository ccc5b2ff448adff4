"""Tests for logging configuration."""
import pytest
from loguru import logger

from ucwhittle.monitoring.logging_config import console_level, log_stage, setup_logging


class TestSetupLogging:
    """Test cases for log sinks."""

    def teardown_method(self):
        """Drop the file sinks the tests opened."""
        setup_logging(None)

    def test_file_sinks(self, tmp_path):
        """run.log takes everything, error.log only errors."""
        setup_logging(tmp_path / "logs")
        logger.debug("solver detail")
        logger.error("seed failed")
        logger.complete()

        run_log = (tmp_path / "logs" / "run.log").read_text()
        error_log = (tmp_path / "logs" / "error.log").read_text()
        assert "solver detail" in run_log
        assert "seed failed" in run_log
        assert "seed failed" in error_log
        assert "solver detail" not in error_log

    def test_console_only(self, tmp_path):
        """Without a directory no files are written."""
        setup_logging(None, verbosity=2)
        logger.info("console message")
        assert list(tmp_path.iterdir()) == []

    def test_console_levels(self):
        """-v raises verbosity step by step."""
        assert console_level(0) == "WARNING"
        assert console_level(1) == "INFO"
        assert console_level(2) == "DEBUG"
        assert console_level(5) == "DEBUG"


class TestLogStage:
    """Test cases for stage logging."""

    def test_success(self, captured):
        """A stage logs its start and completion with context."""
        with log_stage("experiment", seeds=3):
            pass
        assert captured[0].startswith("INFO | experiment started | seeds=3")
        assert "experiment completed | seeds=3 | duration=" in captured[1]

    def test_failure(self, captured):
        """A failing stage logs the error and re-raises."""
        with pytest.raises(RuntimeError):
            with log_stage("run", algorithm="wiql"):
                raise RuntimeError("diverged")
        assert any(m.startswith("ERROR | run failed | algorithm=wiql | error=diverged") for m in captured)
        assert not any("completed" in m for m in captured)
