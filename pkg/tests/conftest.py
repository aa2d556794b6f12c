import numpy as np
import pytest

from linbridge import (
    BridgeSpec,
    LinearSystem,
    PiecewisePolyMatrix,
    TimeGrid,
    double_integrator,
    gramian_table,
    wiener_system,
)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def di():
    return double_integrator()


@pytest.fixture(scope="session")
def di_table(di):
    return gramian_table(di, TimeGrid(0.0, 1.0, 1000))


@pytest.fixture(scope="session")
def wiener():
    return wiener_system()


@pytest.fixture(scope="session")
def wiener_table(wiener):
    return gramian_table(wiener, TimeGrid(0.0, 1.0, 1000))


@pytest.fixture(scope="session")
def tv_system():
    # time-varying, polynomial in t, controllable
    A = PiecewisePolyMatrix.from_nested([[[0.0], [1.0, 0.5]], [[-1.0, -1.0], [0.0, -1.0]]])
    B = PiecewisePolyMatrix.from_nested([[[0.0]], [[1.0, 1.0]]])
    return LinearSystem(A, B, 0.0, 1.0)


@pytest.fixture(scope="session")
def tv_table(tv_system):
    return gramian_table(tv_system, TimeGrid(0.0, 1.0, 1000))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
