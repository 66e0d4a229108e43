import shutil

import pytest

from forex_lite.smt import Solver, SolverConfig


def pytest_report_header(config):
    return f"solver: {shutil.which('z3') or 'z3 not found'}"


@pytest.fixture(scope="session")
def solver():
    return Solver(SolverConfig(timeout_ms=20_000))
