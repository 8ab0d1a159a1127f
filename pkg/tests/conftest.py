import math

import numpy as np
import pytest

from tippetop import verification
from tippetop.model import GlideState, TopParameters, boundary_values, lambda_threshold


@pytest.fixture(scope="session")
def ex1() -> TopParameters:
    return verification.example1_parameters()


@pytest.fixture(scope="session")
def cohen() -> TopParameters:
    return verification.cohen_parameters()


@pytest.fixture(scope="session")
def lam(ex1) -> float:
    return 2 * lambda_threshold(ex1)


@pytest.fixture(scope="session")
def bv(ex1, lam):
    return boundary_values(lam, ex1)


@pytest.fixture(scope="session")
def fig3a():
    """Example 1 inversion sampled at 1e-4 s (shared with the acceptance tests)."""
    return verification.fig3a_trajectory()


@pytest.fixture(scope="session")
def cohen_run():
    return verification.cohen_trajectory()


def random_state(rng, theta_range=(0.2, math.pi - 0.2)) -> GlideState:
    return GlideState(theta=rng.uniform(*theta_range), theta_dot=rng.uniform(-20, 20),
                      phi_dot=rng.uniform(-50, 50), omega3=rng.uniform(-200, 200),
                      nu_x=rng.uniform(-0.05, 0.05), nu_y=rng.uniform(-0.05, 0.05))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module and module.LINES:
        terminalreporter.section("acceptance criteria")
        for line in module.LINES:
            terminalreporter.write_line(line)
