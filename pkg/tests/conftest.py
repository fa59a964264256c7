import pytest

from mims import SimConfig
from mims.experiments import build_traces


@pytest.fixture(scope="session")
def small_gups():
    """Four cores of GUPS-like traffic, small enough for every mode in a few seconds."""
    cfg = SimConfig(cores=4, records=3000, seed=7)
    return cfg, build_traces(cfg)


ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the end-of-run summary."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
