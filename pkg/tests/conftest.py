import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tmcrit import DomainSpec, FunctionalParams, eigen_sequence, generate_mesh  # noqa: E402


@pytest.fixture(scope="session")
def square_coarse():
    return generate_mesh(DomainSpec("unit-square"), 0.1)


@pytest.fixture(scope="session")
def square_05():
    return generate_mesh(DomainSpec("unit-square"), 0.05)


@pytest.fixture(scope="session")
def eig_square_05(square_05):
    return eigen_sequence(square_05, 2, 3)


@pytest.fixture(scope="session")
def cube_8():
    return generate_mesh(DomainSpec("cube"), 0.125)


@pytest.fixture
def p2():
    return FunctionalParams(2, 1.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n][1])
