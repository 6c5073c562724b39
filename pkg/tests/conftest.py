import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def spaced_state(P, gaps, sigma=1.0):
    """Droplet array with the given pressures and edge-to-edge gaps."""
    from slipcoarsen.core import DropletArray
    P = np.asarray(P, dtype=float)
    R = 1.0 / (math.sqrt(3.0 * sigma) * P)
    X = np.concatenate([[0.0], np.cumsum(np.asarray(gaps, dtype=float) + R[1:] + R[:-1])])
    return DropletArray(X, P)


@pytest.fixture
def make_state():
    return spaced_state


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k].line())
