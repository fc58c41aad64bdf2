import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dotborn import build_cube  # noqa: E402

REPO = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO / "scenarios"


@pytest.fixture(scope="session")
def cube_grid():
    """Cube of side lambda_d/2 at pitch lambda_d/20, kappa = 1 (N = 1000)."""
    return build_cube(0.5, 0.05, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
