import numpy as np
import pytest

from kirchhoff_nehari import EnergyContext, SolveConfig, build_mesh, builtin_log_power, builtin_pure_power
from kirchhoff_nehari.solver import multistart_pairs, solve_ground_state

# criterion lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mesh63():
    return build_mesh(1, 1.0, 63)


@pytest.fixture(scope="session")
def mesh127():
    return build_mesh(1, 1.0, 127)


@pytest.fixture(scope="session")
def ctx_log(mesh127):
    return EnergyContext(mesh127, builtin_log_power(), 1.0, 1.0)


@pytest.fixture(scope="session")
def ctx_pow63(mesh63):
    return EnergyContext(mesh63, builtin_pure_power(6), 1.0, 1.0)


@pytest.fixture(scope="session")
def ctx_log63(mesh63):
    return EnergyContext(mesh63, builtin_log_power(), 1.0, 1.0)


@pytest.fixture(scope="session")
def ground_log(ctx_log):
    return solve_ground_state(ctx_log, SolveConfig())


@pytest.fixture(scope="session")
def multistart_log(ctx_log):
    return multistart_pairs(ctx_log, SolveConfig(k=8, seed=2024))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
