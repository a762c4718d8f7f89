import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from aeflow import flow, heat, presets  # noqa: E402
from aeflow.geometry import make_grid  # noqa: E402


@pytest.fixture(scope="session")
def grid2000():
    return make_grid(3, 2000)


@pytest.fixture(scope="session")
def grid4000():
    return make_grid(3, 4000)


@pytest.fixture(scope="session")
def bump():
    return presets.positive_R_bump(0.5, 1.0, 1.0)


@pytest.fixture(scope="session")
def bump_run50(bump, grid2000):
    return flow.run(bump.areal_profile(grid2000), 50.0, flow.RunControls(k_max=1))


@pytest.fixture(scope="session")
def bump_run100(bump, grid2000):
    return flow.run(bump.areal_profile(grid2000), 100.0, flow.RunControls(k_max=1))


@pytest.fixture(scope="session")
def bump_heat50(bump_run50):
    return heat.solve_heat(bump_run50, 1.0)


@pytest.fixture(scope="session")
def flat_run(grid2000):
    return flow.run(presets.flat().profile(grid2000), 1.0, flow.RunControls(k_max=1))
