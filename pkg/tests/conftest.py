"""Test configuration."""
import os
import sys
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
from loguru import logger

# Add the project root directory to Python path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# CLI runs must not replace the session's log sinks
patch('ucwhittle.cli.setup_logging', MagicMock()).start()

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.domains.generators import WideMarginGenerator, generate_wide
from ucwhittle.planning.whittle import WhittleTable

CONFIG_DIR = Path(project_root) / "configs"

# Sorted indices of a real eight-arm instance
INDEX_FIXTURE = [0.42, 0.39, 0.28, 0.23, 0.19, 0.11, 0.07, 0.0]


@pytest.fixture
def index_fixture():
    """The eight reference indices, largest first."""
    return list(INDEX_FIXTURE)


@pytest.fixture
def fixture_table():
    """Index table whose arms carry the reference indices in both states."""
    indices = np.repeat(np.array(INDEX_FIXTURE)[:, None], 2, axis=1)
    return WhittleTable(indices=indices, source="fixture")


@pytest.fixture
def binary_rewards():
    """R(s, a) = s."""
    return RewardTable.binary()


@pytest.fixture
def kernel_factory():
    """Draw valid wide-margin 2-state kernels from a generator."""
    generator = WideMarginGenerator()

    def make(rng):
        g = generator.good_probs(1, rng)[0]
        return TransitionKernel.from_good_probs(g[0, 0], g[0, 1], g[1, 0], g[1, 1])

    return make


@pytest.fixture
def small_instance():
    """Four wide-margin arms with budget 2."""
    return generate_wide(4, 0, budget=2)


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config file and return its path."""
    def write(text, name="experiment.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write


@pytest.fixture
def captured():
    """Collect formatted messages from a temporary sink."""
    messages = []
    sink_id = logger.add(messages.append, format="{level} | {message}", level="DEBUG")
    yield messages
    logger.remove(sink_id)
