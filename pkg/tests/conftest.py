import numpy as np
import pytest

from captrans.instance import builtin_example, random_instance

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def example():
    return builtin_example()


@pytest.fixture(scope="session")
def small_example():
    return builtin_example(periods=2, simulated_periods=3, candidates_per_technology=1)


@pytest.fixture
def tiny():
    return random_instance(np.random.default_rng(11), periods=2, machines=2, items=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
