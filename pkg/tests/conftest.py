import numpy as np
import pytest

from crnqueues.model import NetworkModel, htr_model, ltr_model

# ten equally spaced PU loads of the heavy-traffic delay sweep
SWEEP_RHO_PU = np.linspace(0.6, 5.4, 10).tolist()


def sweep_model(rho_pu):
    return NetworkModel.from_rates(10, rho_pu * 0.5e4, 0.5e4, 4e4, 1e4)


@pytest.fixture
def ltr():
    return ltr_model()


@pytest.fixture
def htr():
    return htr_model()


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
