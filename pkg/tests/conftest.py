import pytest

from wpccn.analytic import SystemParams
from wpccn.channel import Topology, variances_from_topology

ACCEPTANCE_LINES = []


@pytest.fixture
def default_stats():
    """Mean gains for d_AS = 10 m, d_SR = 3 m, chi = 2."""
    return variances_from_topology(Topology(10.0, 3.0, 2.0))


@pytest.fixture
def default_params():
    return SystemParams(pa_dbm=35.0, n0_dbm=-80.0, eta=0.5, tau=1 / 3, rate=1.0, n_relays=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
