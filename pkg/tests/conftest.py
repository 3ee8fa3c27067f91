"""Shared builders for the test suite."""

import numpy as np
import pytest

from rdcheck import (
    Field,
    Grid1D,
    QuadraticReversibleSpec,
    SkewLVSpec,
    SystemState,
    instantiate_model,
)

QUAD_DIFFUSION = [1.0, 1.5, 2.0, 2.5]


# Session scope is safe: ReactionSystem is frozen and the tests never
# mutate the shared instances.
@pytest.fixture(scope="session")
def quad_system():
    return instantiate_model(QuadraticReversibleSpec(), QUAD_DIFFUSION)


@pytest.fixture(scope="session")
def skew_system():
    return instantiate_model(
        SkewLVSpec(interaction=[[0.0, 1.0], [-1.0, 0.0]], decay=[1.0, 1.0]),
        [1.0, 2.0],
    )


def bump(grid: Grid1D, center: float, width: float, amplitude: float) -> np.ndarray:
    x = grid.centers
    return amplitude * np.exp(-((x - center) ** 2) / (2.0 * width * width))


def quad_bump_state(grid: Grid1D) -> SystemState:
    """Four strictly positive bumps used by the conservation-style runs."""
    return SystemState(
        0.0,
        [
            Field(grid, bump(grid, 0.3, 0.1, 2.0)),
            Field(grid, bump(grid, 0.7, 0.1, 2.0)),
            Field(grid, 1.0 + bump(grid, 0.5, 0.15, 1.0)),
            Field(grid, 0.5 + bump(grid, 0.2, 0.12, 1.5)),
        ],
    )


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance checklist collected during the run, if any."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance gates")
        for line in RESULTS:
            terminalreporter.write_line(line)
