import numpy as np
import pytest
from hypothesis import settings

from synthcorr.model import ExperimentParams, build

settings.register_profile("synthcorr", max_examples=40, deadline=None)
settings.load_profile("synthcorr")


@pytest.fixture(scope="session")
def params():
    return ExperimentParams()


@pytest.fixture(scope="session")
def model(params):
    return build(params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one summary line per acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
