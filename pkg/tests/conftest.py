import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isingperc.gibbs import SpinConfig
from isingperc.lattice import Rect

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_LINES = []


@pytest.fixture
def record_line():
    return _LINES.append


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


def config_from_rows(rows, x_lo=0, y_lo=0):
    """Build a config from strings drawn top row first, '+' / '-' per site."""
    arr = np.array([[1 if c == "+" else -1 for c in row] for row in rows[::-1]], dtype=np.int8)
    ny, nx = arr.shape
    return SpinConfig(Rect(x_lo, x_lo + nx - 1, y_lo, y_lo + ny - 1).sites(), arr)
