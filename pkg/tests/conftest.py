import numpy as np
import pytest

from curvedenoise.grid import CurveSeries, make_grid


@pytest.fixture
def grid():
    return make_grid(0.0, 1.0, 200)


def fourier(grid, j):
    u = grid.points
    return np.cos(2 * np.pi * j * u) + np.sin(2 * np.pi * j * u)


@pytest.fixture
def fourier_basis(grid):
    return CurveSeries(np.vstack([fourier(grid, j) for j in (1, 2, 3)]), grid)


@pytest.fixture
def report(request):
    """Record a one-line PASS/FAIL verdict shown in the terminal summary."""
    lines = request.config.stash.setdefault(REPORT_KEY, [])

    def add(number, ok, detail):
        lines.append((number, f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return add


REPORT_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
