import pytest

from sma_sim.presets import calibrate_reference_models


@pytest.fixture(scope="session")
def reference_fit():
    """Both calibration stages, run once per session (about a second)."""
    return calibrate_reference_models()


@pytest.fixture(scope="session")
def calibrated(reference_fit):
    return reference_fit["scenarios"]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
