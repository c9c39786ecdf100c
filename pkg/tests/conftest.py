import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_csi_matrices(rng, n_sub=56, n_rx=3, n_tx=3, snr_db=20.0):
    scale = np.sqrt(10 ** (snr_db / 10) / n_tx / 2)
    return scale * (rng.standard_normal((n_sub, n_rx, n_tx))
                    + 1j * rng.standard_normal((n_sub, n_rx, n_tx)))


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
