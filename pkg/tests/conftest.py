"""Shared fixtures and the acceptance summary printed after the run."""

import numpy as np
import pytest

from mfcz.grid import Grid, SampledFunction

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_function(grid: Grid, rng, real: bool = False) -> SampledFunction:
    values = rng.standard_normal(grid.size)
    if not real:
        values = values + 1j * rng.standard_normal(grid.size)
    return SampledFunction(grid, values)
