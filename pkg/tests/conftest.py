import numpy as np
import pytest

from slowfast.grid import build_grid
from slowfast.integrator import SystemState
from slowfast.kernels import make_kernel
from slowfast.model import RossMacdonaldParams
from slowfast.operators import build_operators

DEFAULT = dict(alpha_h=1.0, beta_h=0.25, alpha_v=1.0, beta_v=0.5, d1=0.1, d2=0.01, eps=0.1)


@pytest.fixture
def params():
    return RossMacdonaldParams(**DEFAULT)


@pytest.fixture(scope="session")
def grid101():
    return build_grid(1, 1.0, 101)


@pytest.fixture(scope="session")
def bump101(grid101):
    return make_kernel("smooth_bump", {"radius": 0.2}, grid101)


@pytest.fixture(scope="session")
def ops101(grid101, bump101):
    return build_operators(grid101, bump101, DEFAULT["d2"])


def off_manifold_state(grid):
    """Smooth slow data with the fast variable well away from the manifold."""
    x = grid.mesh()[0]
    return SystemState(0.0, grid.field(0.3 + 0.2 * np.cos(np.pi * x)), grid.field(0.9 - 0.5 * x**2))


@pytest.fixture
def off_state(grid101):
    return off_manifold_state(grid101)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
