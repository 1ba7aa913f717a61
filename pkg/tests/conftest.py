import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402


@pytest.fixture(scope="session")
def small_shock():
    """One small collapse run shared across test modules."""
    return helpers.shock_run()


@pytest.fixture(scope="session")
def small_linear():
    """Short-pulse data evolved with the linear equation (g2 = 0)."""
    return helpers.shock_run(g2=0.0, amplitude=1.0, cells_per_delta=64,
                             n_chars=32)
